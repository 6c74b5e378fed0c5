use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::linalg::{expi_hermitian, C64, I, ONE};
use super::{annihilator, CMatrix, DensityMatrix, HilbertSpace, Operator};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    /// Haar-random pure state.
    Pure,
    /// Normalized complex Wishart matrix `G G† / Tr(G G†)`.
    Mixed,
}

/// `|ψ⟩⟨ψ|` for a (not necessarily normalized) amplitude vector.
pub fn pure_state(space: &HilbertSpace, amplitudes: &[C64]) -> Result<DensityMatrix> {
    let d = space.total_dim();
    if amplitudes.len() != d {
        return Err(crate::error::QrcError::DimensionMismatch {
            expected: d,
            found: amplitudes.len(),
        });
    }
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(invalid("amplitudes", "zero vector"));
    }
    let v: Vec<C64> = amplitudes.iter().map(|z| z / norm).collect();
    let m = CMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj());
    Ok(DensityMatrix::new_unchecked(space.clone(), m))
}

/// Fock state `|n⟩⟨n|` of a single mode.
pub fn basis_state(dim: usize, n: usize) -> Result<DensityMatrix> {
    let space = HilbertSpace::single(dim)?;
    if n >= dim {
        return Err(invalid("n", format!("{n} exceeds cutoff {dim}")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    m[(n, n)] = ONE;
    Ok(DensityMatrix::new_unchecked(space, m))
}

/// Thermal state with mean photon number `mean_photons`, renormalized on the
/// truncated ladder.
pub fn thermal_state(mean_photons: f64, cutoff: usize) -> Result<DensityMatrix> {
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(invalid("mean_photons", format!("{mean_photons} must be >= 0")));
    }
    let space = HilbertSpace::single(cutoff)?;
    let ratio = mean_photons / (1.0 + mean_photons);
    let weights: Vec<f64> = (0..cutoff).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = CMatrix::zeros(cutoff, cutoff);
    for (n, w) in weights.iter().enumerate() {
        m[(n, n)] = C64::new(w / total, 0.0);
    }
    Ok(DensityMatrix::new_unchecked(space, m))
}

/// `exp(ξ a†a† − ξ* a a)` on a truncated mode.
pub fn squeeze_operator(xi: C64, cutoff: usize) -> Result<Operator> {
    let space = HilbertSpace::single(cutoff)?;
    let a = annihilator(&space, 0)?.into_matrix();
    let ad = a.adjoint();
    let generator = &ad * &ad * xi - &a * &a * xi.conj();
    // generator is anti-Hermitian: exp(G) = exp(i · (−iG))
    let h = generator * (-I);
    Operator::new(space, expi_hermitian(&h))
}

/// Random state of dimension `dim`, deterministic in `seed`.
pub fn random_state(dim: usize, seed: u64, kind: StateKind) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_with(dim, &mut rng, kind)
}

pub(crate) fn random_state_with<R: rand::Rng + ?Sized>(
    dim: usize,
    rng: &mut R,
    kind: StateKind,
) -> Result<DensityMatrix> {
    let space = HilbertSpace::single(dim)?;
    let mut gauss = || -> C64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    };
    match kind {
        StateKind::Pure => {
            let v: Vec<C64> = (0..dim).map(|_| gauss()).collect();
            pure_state(&space, &v)
        }
        StateKind::Mixed => {
            let g = CMatrix::from_fn(dim, dim, |_, _| gauss());
            let w = &g * g.adjoint();
            let tr = w.trace();
            let mut m = w / tr;
            // exact Hermitian symmetry
            for i in 0..dim {
                m[(i, i)].im = 0.0;
                for j in (i + 1)..dim {
                    m[(j, i)] = m[(i, j)].conj();
                }
            }
            Ok(DensityMatrix::new_unchecked(space, m))
        }
    }
}
