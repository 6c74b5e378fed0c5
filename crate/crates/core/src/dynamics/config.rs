use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::operator::HilbertSpace;

/// Seedable description of a reservoir. All energies and rates are in units
/// of `gamma`, all times in units of `1/gamma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirParams {
    pub n_sites: usize,
    pub site_cutoff: usize,
    /// Fock dimension of each input mode; empty for a purely classical reservoir.
    pub input_cutoffs: Vec<usize>,
    pub onsite: f64,
    pub nonlinearity: f64,
    pub drive: f64,
    pub input_scale: f64,
    pub gamma: f64,
    /// Hopping amplitudes are drawn from `[0, hopping_max]`.
    pub hopping_max: f64,
    /// Input couplings are drawn from `[0, w_in_max]`.
    pub w_in_max: f64,
    pub tau: f64,
    pub t_init: f64,
    pub multiplex: usize,
    pub dt: f64,
}

impl Default for ReservoirParams {
    fn default() -> Self {
        Self {
            n_sites: 3,
            site_cutoff: 3,
            input_cutoffs: vec![2],
            onsite: 0.0,
            nonlinearity: 0.0,
            drive: 0.1,
            input_scale: 1.0,
            gamma: 1.0,
            hopping_max: 1.0,
            w_in_max: 1.0,
            tau: 1.0,
            t_init: 5.0,
            multiplex: 8,
            dt: 0.01,
        }
    }
}

impl ReservoirParams {
    /// Draws hopping amplitudes and input couplings.
    pub fn sample(&self, seed: u64) -> Result<ReservoirConfig> {
        let g = self.gamma;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hopping = lattice_edges(self.n_sites)
            .into_iter()
            .map(|(i, j)| Coupling {
                i,
                j,
                value: rng.gen::<f64>() * self.hopping_max * g,
            })
            .collect();
        let w_in = (0..self.input_cutoffs.len())
            .map(|_| {
                (0..self.n_sites)
                    .map(|_| rng.gen::<f64>() * self.w_in_max * g)
                    .collect()
            })
            .collect();
        let cfg = ReservoirConfig {
            n_sites: self.n_sites,
            site_cutoff: self.site_cutoff,
            input_cutoffs: self.input_cutoffs.clone(),
            onsite: vec![self.onsite * g; self.n_sites],
            hopping,
            nonlinearity: vec![self.nonlinearity * g; self.n_sites],
            drive: self.drive * g,
            input_scale: self.input_scale * g,
            gamma: g,
            w_in,
            tau: self.tau / g,
            t_init: self.t_init / g,
            multiplex: self.multiplex,
            dt: self.dt / g,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Symmetric hopping `h_ij = h_ji` between sites `i` and `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// A fully specified reservoir realization in absolute units.
///
/// Mode layout of the simulated space: input modes first, then sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub n_sites: usize,
    pub site_cutoff: usize,
    pub input_cutoffs: Vec<usize>,
    pub onsite: Vec<f64>,
    pub hopping: Vec<Coupling>,
    pub nonlinearity: Vec<f64>,
    pub drive: f64,
    pub input_scale: f64,
    pub gamma: f64,
    /// `w_in[k][j]` couples input mode `k` to site `j`.
    pub w_in: Vec<Vec<f64>>,
    pub tau: f64,
    pub t_init: f64,
    pub multiplex: usize,
    pub dt: f64,
}

impl ReservoirConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(invalid("n_sites", "must be positive"));
        }
        if self.site_cutoff < 2 || self.input_cutoffs.iter().any(|&d| d < 2) {
            return Err(invalid("cutoff", "Fock dimensions must be at least 2"));
        }
        if self.onsite.len() != self.n_sites || self.nonlinearity.len() != self.n_sites {
            return Err(invalid("onsite", "one value per site required"));
        }
        for c in &self.hopping {
            if c.i >= self.n_sites || c.j >= self.n_sites || c.i == c.j {
                return Err(invalid("hopping", format!("bad edge ({}, {})", c.i, c.j)));
            }
        }
        if self.w_in.len() != self.input_cutoffs.len()
            || self.w_in.iter().any(|row| row.len() != self.n_sites)
        {
            return Err(invalid("w_in", "shape must be inputs x sites"));
        }
        if self.w_in.iter().flatten().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(invalid("w_in", "couplings must be finite and non-negative"));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", "must be positive"));
        }
        if self.multiplex == 0 {
            return Err(invalid("multiplex", "V must be at least 1"));
        }
        if !(self.tau > 0.0) || !(self.dt > 0.0) || !(self.t_init >= 0.0) {
            return Err(invalid("tau", "times must be positive"));
        }
        let finite = [self.drive, self.input_scale]
            .iter()
            .chain(&self.onsite)
            .chain(&self.nonlinearity)
            .all(|x| x.is_finite());
        if !finite {
            return Err(invalid("drive", "parameters must be finite"));
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.input_cutoffs.len()
    }

    pub fn input_mode(&self, k: usize) -> usize {
        k
    }

    pub fn site_mode(&self, j: usize) -> usize {
        self.n_inputs() + j
    }

    pub fn space(&self) -> HilbertSpace {
        let mut dims = self.input_cutoffs.clone();
        dims.extend(std::iter::repeat(self.site_cutoff).take(self.n_sites));
        HilbertSpace::new(dims).expect("validated cutoffs")
    }

    pub fn input_space(&self) -> Option<HilbertSpace> {
        if self.input_cutoffs.is_empty() {
            None
        } else {
            Some(HilbertSpace::new(self.input_cutoffs.clone()).expect("validated cutoffs"))
        }
    }

    /// `γ_k = Σ_j (W^in_jk)² / γ`.
    pub fn input_decay(&self, k: usize) -> f64 {
        self.w_in[k].iter().map(|w| w * w).sum::<f64>() / self.gamma
    }

    /// Drive amplitude `P + W u`.
    pub fn drive_amplitude(&self, u: f64) -> f64 {
        self.drive + self.input_scale * u
    }

    /// Features per input step, `K = N V`.
    pub fn feature_count(&self) -> usize {
        self.n_sites * self.multiplex
    }
}

/// Most-square `rows x cols` factorization with `rows <= cols`.
pub fn lattice_shape(n: usize) -> (usize, usize) {
    let mut rows = 1;
    let mut r = 1;
    while r * r <= n {
        if n % r == 0 {
            rows = r;
        }
        r += 1;
    }
    (rows, n / rows.max(1))
}

/// Nearest-neighbour pairs `(i, j)` with `i < j` on the lattice, sites
/// numbered row-major.
pub fn lattice_edges(n: usize) -> Vec<(usize, usize)> {
    let (rows, cols) = lattice_shape(n);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let s = r * cols + c;
            if c + 1 < cols {
                edges.push((s, s + 1));
            }
            if r + 1 < rows {
                edges.push((s, s + cols));
            }
        }
    }
    edges
}
