use crate::error::{QrcError, Result};
use crate::operator::linalg::hermitize;
use crate::operator::{project_spectrahedron, CMatrix, DensityMatrix, HilbertSpace, C64};

/// Real parts row-major, then imaginary parts row-major.
pub fn vectorize_density(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        out.extend((0..d).map(|j| m[(i, j)].re));
    }
    for i in 0..d {
        out.extend((0..d).map(|j| m[(i, j)].im));
    }
    out
}

/// Unstacks a `2D²` vector, Hermitizes and projects onto the density
/// matrices of `space`.
pub fn reconstruct_density(y: &[f64], space: &HilbertSpace) -> Result<DensityMatrix> {
    let d = space.total_dim();
    if y.len() != 2 * d * d {
        return Err(QrcError::DimensionMismatch {
            expected: 2 * d * d,
            found: y.len(),
        });
    }
    let m = CMatrix::from_fn(d, d, |i, j| C64::new(y[i * d + j], y[d * d + i * d + j]));
    project_spectrahedron(&hermitize(&m), space.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::linalg::approx_eq;
    use crate::operator::{random_state, StateKind};

    #[test]
    fn round_trip() {
        for seed in 0..5 {
            let rho = random_state(4, seed, StateKind::Mixed).unwrap();
            let back = reconstruct_density(&vectorize_density(rho.matrix()), rho.space()).unwrap();
            assert!(approx_eq(back.matrix(), rho.matrix(), 1e-12));
        }
    }

    #[test]
    fn zero_vector_gives_maximally_mixed() {
        let space = HilbertSpace::single(2).unwrap();
        let rho = reconstruct_density(&[0.0; 8], &space).unwrap();
        let half = CMatrix::identity(2, 2) * C64::from(0.5);
        assert!(approx_eq(rho.matrix(), &half, 1e-14));
        assert!(reconstruct_density(&[0.0; 7], &space).is_err());
    }

    #[test]
    fn stacking_order() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(0.1, 0.2);
        m[(1, 0)] = C64::new(0.1, -0.2);
        assert_eq!(vectorize_density(&m), vec![0.0, 0.1, 0.1, 0.0, 0.0, 0.2, -0.2, 0.0]);
    }
}
