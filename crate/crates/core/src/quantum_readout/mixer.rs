use serde::{Deserialize, Serialize};

use crate::dynamics::ReservoirConfig;
use crate::error::{invalid, Result};
use crate::operator::linalg::expi_hermitian;
use crate::operator::{CMatrix, C64};

/// Candidate readout modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModeSet {
    /// Input modes only.
    In,
    /// Reservoir sites only.
    Rv,
    /// Input modes, then sites.
    All,
}

impl ModeSet {
    /// Mode indices of the candidates in the reservoir space.
    pub fn modes(&self, cfg: &ReservoirConfig) -> Vec<usize> {
        let inputs = (0..cfg.n_inputs()).map(|k| cfg.input_mode(k));
        let sites = (0..cfg.n_sites).map(|j| cfg.site_mode(j));
        match self {
            ModeSet::In => inputs.collect(),
            ModeSet::Rv => sites.collect(),
            ModeSet::All => inputs.chain(sites).collect(),
        }
    }

    /// Number of reservoir sites giving `n_r` candidates with `n_inputs`
    /// input modes, if any.
    pub fn sites_for(&self, n_r: usize, n_inputs: usize) -> Option<usize> {
        match self {
            ModeSet::In => None,
            ModeSet::Rv => Some(n_r),
            ModeSet::All => n_r.checked_sub(n_inputs).filter(|&n| n > 0),
        }
    }
}

/// Number of reals parametrizing an `n x n` Hermitian generator.
pub fn param_count(n_r: usize) -> usize {
    n_r * n_r
}

/// Hermitian `G` from `theta`: `n` diagonal reals, then `(re, im)` of each
/// upper-triangle entry in row-major order.
pub fn hermitian_from_params(theta: &[f64], n: usize) -> Result<CMatrix> {
    if theta.len() != param_count(n) {
        return Err(invalid("theta", format!("expected {} entries, got {}", param_count(n), theta.len())));
    }
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = C64::from(theta[i]);
    }
    let mut p = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = C64::new(theta[p], theta[p + 1]);
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
            p += 2;
        }
    }
    Ok(g)
}

/// Full unitary `exp(i G(theta))`.
pub fn unitary_from_params(theta: &[f64], n: usize) -> Result<CMatrix> {
    Ok(expi_hermitian(&hermitian_from_params(theta, n)?))
}

/// First `m` rows of `exp(i G(theta))`: `C_m = Σ_j o_mj c_j`.
pub fn modes_from_params(theta: &[f64], m: usize, n_r: usize) -> Result<CMatrix> {
    if m == 0 || m > n_r {
        return Err(invalid("outputs", format!("need 1 <= M <= N_R = {n_r}, got {m}")));
    }
    Ok(unitary_from_params(theta, n_r)?.rows(0, m).into_owned())
}

/// Output-mode parametrization over a candidate set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeMixer {
    pub theta: Vec<f64>,
    /// `M`.
    pub outputs: usize,
    /// `N_R`.
    pub n_r: usize,
    pub mode_set: ModeSet,
}

impl ModeMixer {
    pub fn identity(outputs: usize, n_r: usize, mode_set: ModeSet) -> Self {
        Self {
            theta: vec![0.0; param_count(n_r)],
            outputs,
            n_r,
            mode_set,
        }
    }

    pub fn coefficients(&self) -> Result<CMatrix> {
        modes_from_params(&self.theta, self.outputs, self.n_r)
    }
}
