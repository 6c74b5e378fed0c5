//! Wigner functions of single-mode states on a square phase-space grid.
//!
//! Convention: `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`, `ħ = 1`, so that
//! `∬ W dx dp = 1` and the vacuum peaks at `1/π`. Evaluation uses the Fock
//! representation of the displaced parity operator,
//!
//! `W(α) = (e^{−2|α|²}/π) Σ_{m≤n} c_{mn} Re[ρ_{mn} (−1)^m (2α)^{n−m} √(m!/n!) L_m^{(n−m)}(4|α|²)]`
//!
//! with `α = (x + ip)/√2`, `c_{mm} = 1` and `c_{mn} = 2` otherwise.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg::C64;
use super::DensityMatrix;
use crate::error::{QrcError, Result};

/// Evenly spaced square grid over `[-half_width, half_width]²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 61,
            half_width: 3.0,
        }
    }
}

impl GridSpec {
    pub fn axis(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.half_width
                } else {
                    -self.half_width + 2.0 * self.half_width * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    pub fn cell_area(&self) -> f64 {
        let h = 2.0 * self.half_width / (self.points - 1) as f64;
        h * h
    }
}

/// Wigner function samples; `values[(i, j)] = W(x_i, p_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_points: Vec<f64>,
    pub p_points: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    /// Row-major (x-major) flattening.
    pub fn to_row_major(&self) -> Vec<f64> {
        let (r, c) = self.values.shape();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(self.values[(i, j)]);
            }
        }
        out
    }

    pub fn from_row_major(spec: &GridSpec, data: &[f64]) -> Result<Self> {
        let n = spec.points;
        if data.len() != n * n {
            return Err(QrcError::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        let axis = spec.axis();
        Ok(Self {
            x_points: axis.clone(),
            p_points: axis,
            values: DMatrix::from_row_slice(n, n, data),
        })
    }

    /// Riemann sum `Σ W · ΔxΔp`.
    pub fn integral(&self) -> f64 {
        let dx = self.x_points[1] - self.x_points[0];
        let dp = self.p_points[1] - self.p_points[0];
        self.values.sum() * dx * dp
    }
}

/// Precomputed Fock-basis Wigner kernels for one grid and cutoff.
#[derive(Clone, Debug)]
pub struct WignerKernel {
    spec: GridSpec,
    cutoff: usize,
    // kernels[(m, n)] for m <= n, flattened x-major
    kernels: Vec<(usize, usize, Vec<C64>)>,
}

impl WignerKernel {
    pub fn new(spec: GridSpec, cutoff: usize) -> Self {
        let axis = spec.axis();
        let npts = axis.len();
        let mut alphas = Vec::with_capacity(npts * npts);
        for &x in &axis {
            for &p in &axis {
                alphas.push(C64::new(x, p) * std::f64::consts::FRAC_1_SQRT_2);
            }
        }
        let mut kernels = Vec::new();
        for m in 0..cutoff {
            for n in m..cutoff {
                let k = n - m;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let ratio = ln_factorial(m) - ln_factorial(n);
                let pref = sign * (0.5 * ratio).exp() * if k == 0 { 1.0 } else { 2.0 }
                    / std::f64::consts::PI;
                let vals = alphas
                    .iter()
                    .map(|&alpha| {
                        let b = 4.0 * alpha.norm_sqr();
                        let lag = laguerre(m, k as f64, b);
                        (alpha * 2.0).powu(k as u32) * (pref * lag * (-0.5 * b).exp())
                    })
                    .collect();
                kernels.push((m, n, vals));
            }
        }
        Self {
            spec,
            cutoff,
            kernels,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<WignerGrid> {
        if rho.space().num_modes() != 1 {
            return Err(QrcError::InvalidSpace(
                "Wigner functions are defined for single-mode states".into(),
            ));
        }
        if rho.dim() > self.cutoff {
            return Err(QrcError::DimensionMismatch {
                expected: self.cutoff,
                found: rho.dim(),
            });
        }
        let d = rho.dim();
        let npts = self.spec.points;
        let mut acc = vec![0.0; npts * npts];
        for (m, n, kernel) in &self.kernels {
            if *n >= d {
                continue;
            }
            let r = rho.matrix()[(*m, *n)];
            if r.norm() == 0.0 {
                continue;
            }
            for (a, k) in acc.iter_mut().zip(kernel) {
                *a += r.re * k.re - r.im * k.im;
            }
        }
        let axis = self.spec.axis();
        Ok(WignerGrid {
            x_points: axis.clone(),
            p_points: axis,
            values: DMatrix::from_row_slice(npts, npts, &acc),
        })
    }
}

impl WignerKernel {
    /// Real coordinates `f` of a state such that the grid values are
    /// `Σ_i f_i B_i` over the kernel basis: `Re ρ_mn` for `m ≤ n`, then
    /// `Im ρ_mn` for `m < n`.
    pub fn coordinates(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.space().num_modes() != 1 || rho.dim() > self.cutoff {
            return Err(QrcError::DimensionMismatch {
                expected: self.cutoff,
                found: rho.dim(),
            });
        }
        let d = rho.dim();
        let m = rho.matrix();
        let pick = |a: usize, b: usize| if b < d { m[(a, b)] } else { C64::new(0.0, 0.0) };
        let mut f: Vec<f64> = self.kernels.iter().map(|(a, b, _)| pick(*a, *b).re).collect();
        f.extend(self.kernels.iter().filter(|(a, b, _)| a != b).map(|(a, b, _)| pick(*a, *b).im));
        Ok(f)
    }

    /// `G_ij = Σ_grid B_i B_j`, so that `Σ_grid W² = fᵀ G f`.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut basis: Vec<Vec<f64>> = self.kernels.iter().map(|(_, _, k)| k.iter().map(|z| z.re).collect()).collect();
        basis.extend(
            self.kernels
                .iter()
                .filter(|(a, b, _)| a != b)
                .map(|(_, _, k)| k.iter().map(|z| -z.im).collect()),
        );
        let n = basis.len();
        DMatrix::from_fn(n, n, |i, j| basis[i].iter().zip(&basis[j]).map(|(x, y)| x * y).sum())
    }
}

/// Wigner function of a single-mode state on `spec`.
pub fn wigner(rho: &DensityMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    WignerKernel::new(*spec, rho.dim()).evaluate(rho)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Generalized Laguerre polynomial `L_n^{(k)}(x)` by three-term recurrence.
fn laguerre(n: usize, k: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for i in 1..n {
        let fi = i as f64;
        let next = ((2.0 * fi + 1.0 + k - x) * cur - (fi + k) * prev) / (fi + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
