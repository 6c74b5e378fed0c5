use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::FeatureMatrix;
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnConfig {
    pub nodes: usize,
    pub connection_probability: f64,
    pub spectral_radius: f64,
    /// Input weights are drawn from `[-input_scale, input_scale]`.
    pub input_scale: f64,
    pub seed: u64,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            nodes: 24,
            connection_probability: 0.1,
            spectral_radius: 0.9,
            input_scale: 1.0,
            seed: 0,
        }
    }
}

/// Largest eigenvalue modulus of a real square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Echo state network `x_{l+1} = tanh(W_in u_{l+1} + W x_l)`.
#[derive(Clone, Debug)]
pub struct Esn {
    w_in: DVector<f64>,
    w: DMatrix<f64>,
    state: DVector<f64>,
}

impl Esn {
    pub fn new(cfg: &EsnConfig) -> Result<Self> {
        if cfg.nodes == 0 {
            return Err(invalid("nodes", "must be positive"));
        }
        if !(0.0..=1.0).contains(&cfg.connection_probability) || cfg.connection_probability == 0.0 {
            return Err(invalid("connection_probability", "must lie in (0, 1]"));
        }
        if !(cfg.spectral_radius > 0.0) {
            return Err(invalid("spectral_radius", "must be positive"));
        }
        let n = cfg.nodes;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let w_in = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0) * cfg.input_scale);
        // sparse draws can be nilpotent; redraw until the radius is usable
        for _ in 0..1000 {
            let w = DMatrix::from_fn(n, n, |_, _| {
                if rng.gen::<f64>() < cfg.connection_probability {
                    rng.gen_range(-1.0..=1.0)
                } else {
                    0.0
                }
            });
            let rho = spectral_radius(&w);
            if rho > 1e-8 {
                return Ok(Self {
                    w_in,
                    w: w * (cfg.spectral_radius / rho),
                    state: DVector::zeros(n),
                });
            }
        }
        Err(invalid("connection_probability", "could not draw a non-nilpotent reservoir"))
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    pub fn set_state(&mut self, x: DVector<f64>) {
        assert_eq!(x.len(), self.state.len());
        self.state = x;
    }

    pub fn step(&mut self, u: f64) -> &DVector<f64> {
        let pre = &self.w_in * u + &self.w * &self.state;
        self.state = pre.map(f64::tanh);
        &self.state
    }
}

/// Runs from `x_0 = 0` and returns one row per input, bias appended.
pub fn esn_run(cfg: &EsnConfig, u: &[f64]) -> Result<FeatureMatrix> {
    let mut esn = Esn::new(cfg)?;
    let rows: Vec<Vec<f64>> = u.iter().map(|&ul| esn.step(ul).iter().copied().collect()).collect();
    FeatureMatrix::from_rows(&rows)
}
