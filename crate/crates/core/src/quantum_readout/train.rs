use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Diagnostics, Reservoir, ReservoirConfig};
use crate::error::{invalid, QrcError, Result};
use crate::operator::{fidelity, CMatrix, DensityMatrix, GridSpec, WignerKernel, C64};
use crate::tasks::HybridSequence;

use super::mixer::{modes_from_params, param_count, ModeMixer, ModeSet};
use super::nelder_mead::{nelder_mead, NelderMeadOptions};
use super::output::{output_from_moments, output_state_dense, ModeMoments};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trainable {
    /// Mixer only.
    Wo,
    /// Mixer and input couplings `W^in`.
    Wio,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CostKind {
    Ef,
    Ew,
}

/// Output-mode layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSpec {
    pub mode_set: ModeSet,
    /// `M`.
    pub outputs: usize,
    /// Fock dimension of each output mode.
    pub out_cutoff: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSpec {
    pub trainable: Trainable,
    pub cost: CostKind,
    /// Iteration budget of the mixer-only stage.
    pub max_iters: usize,
    pub tolerance: f64,
    pub initial_step: f64,
    /// Iteration budget of the coupling search (`Wio` only). Every
    /// evaluation reruns the reservoir and refits the mixer.
    pub joint_iters: usize,
    /// Mixer iterations per coupling candidate.
    pub inner_iters: usize,
    /// Initial simplex step for the couplings, in logit units.
    pub coupling_step: f64,
    /// Steps discarded before the first training sample.
    pub washout: usize,
    pub train: usize,
    /// Held-out samples following the training window.
    pub eval: usize,
    pub grid: GridSpec,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            trainable: Trainable::Wio,
            cost: CostKind::Ef,
            max_iters: 1500,
            tolerance: 1e-6,
            initial_step: 0.5,
            joint_iters: 20,
            inner_iters: 400,
            coupling_step: 1.0,
            washout: 10,
            train: 200,
            eval: 100,
            grid: GridSpec::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Mixer,
    Joint,
}

/// One optimizer iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub stage: Stage,
    pub iteration: usize,
    pub best: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantumReadoutResult {
    pub mixer: ModeMixer,
    pub w_in: Vec<Vec<f64>>,
    pub train_error: f64,
    pub eval_error: f64,
    /// Error of using the input state itself as the output.
    pub baseline_train: f64,
    pub baseline_eval: f64,
    pub trace: Vec<TraceRecord>,
    pub evaluations: usize,
    /// Mean output population above the output cutoff on the held-out window.
    pub mean_lost: f64,
    pub diagnostics: Diagnostics,
}

/// Reduced-state data of one reservoir snapshot.
#[derive(Clone, Debug)]
enum Snapshot {
    Moments(ModeMoments),
    State(DensityMatrix),
}

/// Targets of one window in the representation the cost needs.
struct Window {
    states: Vec<DensityMatrix>,
    /// Wigner coordinates, for the EW cost.
    coords: Vec<Vec<f64>>,
}

/// Grid-summed Wigner kernels; EW terms become quadratic forms in the
/// state coordinates.
struct WignerForm {
    kernel: WignerKernel,
    gram: DMatrix<f64>,
}

impl WignerForm {
    fn new(grid: &GridSpec, cutoff: usize) -> Self {
        let kernel = WignerKernel::new(grid.clone(), cutoff);
        let gram = kernel.gram();
        Self { kernel, gram }
    }

    /// `Σ(W_t − W_p)² / Σ(W_t + W_p)²` on the grid.
    fn term(&self, t: &[f64], p: &[f64]) -> f64 {
        let n = t.len();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let (di, si) = (t[i] - p[i], t[i] + p[i]);
            for j in 0..n {
                let g = self.gram[(i, j)];
                num += di * g * (t[j] - p[j]);
                den += si * g * (t[j] + p[j]);
            }
        }
        if den <= 0.0 {
            0.0
        } else {
            (num / den).max(0.0)
        }
    }
}

struct Evaluator<'a> {
    cost: CostKind,
    readout: &'a ReadoutSpec,
    n_r: usize,
    modes: Vec<usize>,
    wigner: Option<WignerForm>,
}

impl Evaluator<'_> {
    fn outputs(&self, theta: &[f64], snaps: &[Snapshot]) -> Result<(Vec<DensityMatrix>, f64)> {
        let o = modes_from_params(theta, self.readout.outputs, self.n_r)?;
        let cutoff = self.readout.out_cutoff;
        let row: Vec<C64> = o.row(0).iter().copied().collect();
        let mut lost = 0.0;
        let mut out = Vec::with_capacity(snaps.len());
        let mut coeff: Option<Vec<C64>> = None;
        for s in snaps {
            let r = match s {
                Snapshot::Moments(m) => {
                    if coeff.is_none() {
                        coeff = Some(m.coefficient_vector(&row)?);
                    }
                    output_from_moments(m, coeff.as_deref().unwrap_or_default(), cutoff)?
                }
                Snapshot::State(rho) => output_state_dense(rho, &self.modes, &o, cutoff)?,
            };
            lost += r.lost;
            out.push(r.state);
        }
        Ok((out, lost / snaps.len().max(1) as f64))
    }

    fn error(&self, outputs: &[DensityMatrix], w: &Window) -> Result<f64> {
        let n = outputs.len() as f64;
        match self.cost {
            CostKind::Ef => {
                let mut acc = 0.0;
                for (p, t) in outputs.iter().zip(&w.states) {
                    acc += (1.0 - fidelity(t, p)?).powi(2);
                }
                Ok((acc / n).sqrt())
            }
            CostKind::Ew => {
                let form = self.wigner.as_ref().ok_or_else(|| invalid("cost", "missing Wigner kernel"))?;
                let mut acc = 0.0;
                for (p, t) in outputs.iter().zip(&w.coords) {
                    acc += form.term(t, &form.kernel.coordinates(p)?);
                }
                Ok((acc / n).sqrt())
            }
        }
    }

    fn window(&self, states: &[DensityMatrix]) -> Result<Window> {
        let coords = match &self.wigner {
            Some(f) => states
                .iter()
                .map(|s| f.kernel.coordinates(s))
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        Ok(Window {
            states: states.to_vec(),
            coords,
        })
    }
}

struct MixerFit {
    theta: Vec<f64>,
    value: f64,
    history: Vec<f64>,
    evaluations: usize,
}

/// Mixer-only Nelder–Mead on fixed snapshots, restarted from the incumbent
/// while the iteration budget lasts and the restart improves.
fn fit_mixer(
    ev: &Evaluator,
    snaps: &[Snapshot],
    targets: &Window,
    theta0: &[f64],
    budget: usize,
    opts: &NelderMeadOptions,
) -> Result<MixerFit> {
    let cost = |theta: &[f64]| -> Result<f64> {
        let (out, _) = ev.outputs(theta, snaps)?;
        ev.error(&out, targets)
    };
    let mut fit = MixerFit {
        theta: theta0.to_vec(),
        value: f64::INFINITY,
        history: Vec::new(),
        evaluations: 0,
    };
    let mut left = budget;
    while left > 0 {
        let r = nelder_mead(cost, &fit.theta, &NelderMeadOptions { max_iters: left, ..opts.clone() })?;
        fit.evaluations += r.evaluations;
        left = left.saturating_sub(r.history.len().saturating_sub(1).max(1));
        let best = fit.value;
        fit.history.extend(r.history.iter().map(|v| v.min(best)));
        let improved = r.value < fit.value - opts.tolerance;
        if r.value < fit.value {
            fit.value = r.value;
            fit.theta = r.x;
        }
        if !improved {
            break;
        }
    }
    Ok(fit)
}

/// Runs the reservoir from `warm` over the first `end` steps of `data` and
/// snapshots the candidate modes at the end of each step in `from..end`.
fn simulate(
    cfg: &ReservoirConfig,
    warm: &DensityMatrix,
    data: &HybridSequence,
    modes: &[usize],
    single_output: bool,
    out_cutoff: usize,
    from: usize,
    end: usize,
) -> Result<(Vec<Snapshot>, Diagnostics)> {
    let mut r = Reservoir::new(cfg)?;
    r.set_state(warm)?;
    r.set_input_active(true);
    let space = cfg.space();
    let band = out_cutoff - 1;
    let mut snaps = Vec::with_capacity(end - from);
    for l in 0..end {
        r.step(data.u[l], data.beta.get(l))?;
        if l >= from {
            let rho = r.state();
            snaps.push(if single_output {
                Snapshot::Moments(ModeMoments::banded(rho.matrix(), &space, modes, band)?)
            } else {
                Snapshot::State(rho)
            });
        }
    }
    Ok((snaps, r.diagnostics().clone()))
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-6, 1.0 - 1e-6);
    (p / (1.0 - p)).ln()
}

fn with_couplings(cfg: &ReservoirConfig, z: &[f64]) -> ReservoirConfig {
    let mut c = cfg.clone();
    let n = cfg.n_sites;
    for (k, row) in c.w_in.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            *w = cfg.gamma * logistic(z[k * n + j]);
        }
    }
    c
}

/// Trains the output modes (and, under `Wio`, the input couplings) so that
/// the output state at the end of step `l` reproduces the target of step `l`.
///
/// Samples are the steps `offset + washout ..` of `data`: `train` for
/// fitting, then `eval` held out.
pub fn train_quantum_readout(
    cfg: &ReservoirConfig,
    data: &HybridSequence,
    readout: &ReadoutSpec,
    spec: &TrainSpec,
) -> Result<QuantumReadoutResult> {
    data.validate()?;
    if cfg.n_inputs() == 0 || data.beta.len() != data.len() {
        return Err(invalid("data", "quantum readout needs quantum inputs at every step"));
    }
    if data.targets.states.is_empty() {
        return Err(QrcError::InsufficientData("no target states".into()));
    }
    if readout.out_cutoff < 2 {
        return Err(invalid("out_cutoff", "must be at least 2"));
    }
    let first = data.offset + spec.washout;
    let train_end = first + spec.train;
    let end = train_end + spec.eval;
    if spec.train == 0 || spec.eval == 0 || end > data.len() || end - data.offset > data.targets.len() {
        return Err(QrcError::InsufficientData(format!(
            "need {end} steps with targets, have {}",
            data.len()
        )));
    }
    let modes = readout.mode_set.modes(cfg);
    let n_r = modes.len();
    if readout.outputs == 0 || readout.outputs > n_r {
        return Err(invalid("outputs", format!("need 1 <= M <= N_R = {n_r}")));
    }
    let target_of = |l: usize| &data.targets.states[l - data.offset];
    if let Some(t) = (first..end).map(target_of).find(|t| t.dim() != readout.out_cutoff.pow(readout.outputs as u32)) {
        return Err(QrcError::DimensionMismatch {
            expected: readout.out_cutoff.pow(readout.outputs as u32),
            found: t.dim(),
        });
    }
    let wigner = match spec.cost {
        CostKind::Ew if readout.outputs == 1 => Some(WignerForm::new(&spec.grid, readout.out_cutoff)),
        CostKind::Ew => return Err(invalid("cost", "EW is defined for a single output mode")),
        CostKind::Ef => None,
    };
    let ev = Evaluator {
        cost: spec.cost,
        readout,
        n_r,
        modes: modes.clone(),
        wigner,
    };
    let train_targets: Vec<DensityMatrix> = (first..train_end).map(|l| target_of(l).clone()).collect();
    let eval_targets: Vec<DensityMatrix> = (train_end..end).map(|l| target_of(l).clone()).collect();
    let train_w = ev.window(&train_targets)?;
    let eval_w = ev.window(&eval_targets)?;

    let baseline = |w: &Window, range: std::ops::Range<usize>| -> Result<f64> {
        let inputs: Vec<DensityMatrix> = data.beta[range].to_vec();
        if inputs.iter().any(|b| b.dim() != w.states[0].dim()) {
            return Err(invalid("baseline", "input and target dimensions differ"));
        }
        ev.error(&inputs, w)
    };
    let baseline_train = baseline(&train_w, first..train_end)?;
    let baseline_eval = baseline(&eval_w, train_end..end)?;

    // Warmup runs with the input coupling off, so it does not depend on W^in.
    let mut sim_cfg = cfg.clone();
    sim_cfg.multiplex = 1;
    let mut warm_res = Reservoir::new(&sim_cfg)?;
    warm_res.warmup()?;
    let warm = warm_res.state();
    let mut diagnostics = warm_res.diagnostics().clone();
    let single = readout.outputs == 1;

    let p = param_count(n_r);
    let mut trace = Vec::new();
    let mut evaluations = 0;
    let opts = NelderMeadOptions {
        max_iters: spec.max_iters,
        tolerance: spec.tolerance,
        initial_step: spec.initial_step,
    };

    // Stage 1: mixer only, on one reservoir run.
    let (mut snaps, diag) = simulate(&sim_cfg, &warm, data, &modes, single, readout.out_cutoff, first, end)?;
    diagnostics.merge(&diag);
    let fit = fit_mixer(&ev, &snaps[..spec.train], &train_w, &vec![0.0; p], spec.max_iters, &opts)?;
    evaluations += fit.evaluations;
    trace.extend(fit.history.iter().enumerate().map(|(i, &best)| TraceRecord {
        stage: Stage::Mixer,
        iteration: i,
        best,
    }));
    let mut theta = fit.theta;
    let mut best = fit.value;

    // Stage 2: search over the input couplings; each candidate gets its own
    // reservoir run and a mixer refit started from the stage-1 optimum.
    let mut sim_cfg = sim_cfg;
    if spec.trainable == Trainable::Wio && spec.joint_iters > 0 {
        let z0: Vec<f64> = cfg.w_in.iter().flatten().map(|w| logit(w / cfg.gamma)).collect();
        let mut memo: HashMap<Vec<u64>, MixerFit> = HashMap::new();
        let mut inner_evals = 0;
        let start = theta.clone();
        let outer = |z: &[f64]| -> Result<f64> {
            let key: Vec<u64> = z.iter().map(|v| v.to_bits()).collect();
            if let Some(f) = memo.get(&key) {
                return Ok(f.value);
            }
            let c = with_couplings(&sim_cfg, z);
            let (snaps, diag) = simulate(&c, &warm, data, &modes, single, readout.out_cutoff, first, train_end)?;
            diagnostics.merge(&diag);
            let f = fit_mixer(&ev, &snaps, &train_w, &start, spec.inner_iters, &opts)?;
            inner_evals += f.evaluations;
            let v = f.value;
            memo.insert(key, f);
            Ok(v)
        };
        let r = nelder_mead(
            outer,
            &z0,
            &NelderMeadOptions {
                max_iters: spec.joint_iters,
                initial_step: spec.coupling_step,
                ..opts.clone()
            },
        )?;
        evaluations += r.evaluations + inner_evals;
        let offset = trace.len();
        trace.extend(r.history.iter().enumerate().map(|(i, v)| TraceRecord {
            stage: Stage::Joint,
            iteration: offset + i,
            best: v.min(best),
        }));
        let key: Vec<u64> = r.x.iter().map(|v| v.to_bits()).collect();
        if r.value < best {
            best = r.value;
            theta = memo.remove(&key).map(|f| f.theta).unwrap_or(theta);
            sim_cfg = with_couplings(&sim_cfg, &r.x);
            let (fresh, diag) = simulate(&sim_cfg, &warm, data, &modes, single, readout.out_cutoff, first, end)?;
            diagnostics.merge(&diag);
            snaps = fresh;
        }
    }

    // Both windows under the trained parameters.
    let (train_out, _) = ev.outputs(&theta, &snaps[..spec.train])?;
    let (eval_out, mean_lost) = ev.outputs(&theta, &snaps[spec.train..])?;
    let train_error = ev.error(&train_out, &train_w)?;
    let eval_error = ev.error(&eval_out, &eval_w)?;
    log::debug!("quantum readout: search best {best:.4e}, final train {train_error:.4e}");
    Ok(QuantumReadoutResult {
        mixer: ModeMixer {
            theta,
            outputs: readout.outputs,
            n_r,
            mode_set: readout.mode_set,
        },
        w_in: sim_cfg.w_in.clone(),
        train_error,
        eval_error,
        baseline_train,
        baseline_eval,
        trace,
        evaluations,
        mean_lost,
        diagnostics,
    })
}

/// Cost of fixed parameters on explicit reservoir states: the output of
/// `mixer` applied to each state, compared with the aligned targets.
pub fn cost_eval(
    states: &[DensityMatrix],
    modes: &[usize],
    mixer: &ModeMixer,
    targets: &[DensityMatrix],
    readout: &ReadoutSpec,
    cost: CostKind,
    grid: &GridSpec,
) -> Result<f64> {
    if states.len() != targets.len() {
        return Err(QrcError::DimensionMismatch {
            expected: targets.len(),
            found: states.len(),
        });
    }
    if states.is_empty() {
        return Err(QrcError::InsufficientData("no samples".into()));
    }
    let ev = Evaluator {
        cost,
        readout,
        n_r: mixer.n_r,
        modes: modes.to_vec(),
        wigner: (cost == CostKind::Ew).then(|| WignerForm::new(grid, readout.out_cutoff)),
    };
    let o: CMatrix = mixer.coefficients()?;
    let outputs = states
        .iter()
        .map(|s| Ok(output_state_dense(s, modes, &o, readout.out_cutoff)?.state))
        .collect::<Result<Vec<_>>>()?;
    ev.error(&outputs, &ev.window(targets)?)
}
