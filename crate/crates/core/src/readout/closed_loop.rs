use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ReadoutWeights;
use crate::dynamics::Reservoir;
use crate::error::{invalid, QrcError, Result};
use crate::operator::DensityMatrix;

/// Largest admissible generated control before the loop is aborted.
pub const DIVERGENCE_LIMIT: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// Closed-loop step whose fed input is shifted.
    pub step: usize,
    pub amount: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClosedLoopOutput {
    /// Classical input fed at each step (perturbation included).
    pub inputs: Vec<f64>,
    /// Next-step prediction emitted at each step.
    pub predictions: Vec<f64>,
    /// Tomography head output at each step, if a head was given.
    pub tomography: Vec<DVector<f64>>,
}

/// Runs the reservoir autonomously for `steps` steps. The first input is
/// `u0`; every later input is the previous next-step prediction (column 0
/// of `next_step`). Quantum inputs come from `beta_source`.
pub fn closed_loop_generate(
    reservoir: &mut Reservoir,
    next_step: &ReadoutWeights,
    tomography: Option<&ReadoutWeights>,
    beta_source: &[DensityMatrix],
    u0: f64,
    steps: usize,
    perturbation: Option<Perturbation>,
) -> Result<ClosedLoopOutput> {
    let quantum = reservoir.config().n_inputs() > 0;
    if quantum && beta_source.len() < steps {
        return Err(invalid("beta_source", format!("{} states for {steps} steps", beta_source.len())));
    }
    if next_step.output_dim() == 0 {
        return Err(invalid("next_step", "readout has no outputs"));
    }
    let mut out = ClosedLoopOutput::default();
    let mut u = u0;
    for t in 0..steps {
        if let Some(p) = perturbation.filter(|p| p.step == t) {
            u += p.amount;
        }
        let beta = if quantum { Some(&beta_source[t]) } else { None };
        let features = reservoir.step(u, beta)?;
        let next = next_step.predict_row(&features)?[0];
        if !next.is_finite() || next.abs() > DIVERGENCE_LIMIT {
            return Err(QrcError::Diverged { step: t, value: next });
        }
        if let Some(head) = tomography {
            out.tomography.push(head.predict_row(&features)?);
        }
        out.inputs.push(u);
        out.predictions.push(next);
        u = next;
    }
    Ok(out)
}
