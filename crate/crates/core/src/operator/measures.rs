use super::linalg::{eigh, hermitize, sqrt_psd, C64};
use super::{CMatrix, DensityMatrix};
use crate::error::{QrcError, Result};

/// Uhlmann fidelity `Tr sqrt(sqrt(σ) ρ sqrt(σ))`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(QrcError::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    Ok(fidelity_raw(rho.matrix(), sigma.matrix()))
}

pub(crate) fn fidelity_raw(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let s = sqrt_psd(sigma);
    let inner = hermitize(&(&s * rho * &s));
    let f: f64 = inner
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    f.clamp(0.0, 1.0)
}

/// Bures angle `arccos F(ρ, σ)`.
pub fn bures_angle(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(fidelity(rho, sigma)?.acos())
}

/// `½ ‖ρ − σ‖₁`.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let diff = hermitize(&(rho - sigma));
    0.5 * diff.symmetric_eigenvalues().iter().map(|l| l.abs()).sum::<f64>()
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Nearest (Frobenius) unit-trace positive semidefinite matrix to a Hermitian
/// input. Non-Hermitian input is symmetrized first.
pub fn project_spectrahedron(h: &CMatrix, space: super::HilbertSpace) -> Result<DensityMatrix> {
    let d = space.total_dim();
    if h.nrows() != d || h.ncols() != d {
        return Err(QrcError::DimensionMismatch {
            expected: d,
            found: h.nrows(),
        });
    }
    let (vals, vecs) = eigh(h);
    let projected = project_simplex(vals.as_slice());
    let mut scaled = vecs.clone();
    for (k, &p) in projected.iter().enumerate() {
        scaled.column_mut(k).scale_mut(p);
    }
    let mut m = hermitize(&(scaled * vecs.adjoint()));
    // renormalize against roundoff in the reconstruction
    let tr = m.trace().re;
    m /= C64::new(tr, 0.0);
    Ok(DensityMatrix::new_unchecked(space, m))
}

#[cfg(test)]
mod tests {
    use super::super::{random_state, HilbertSpace, StateKind};
    use super::*;
    use nalgebra::DVector;
    use crate::operator::linalg::{approx_eq, expi_hermitian, frobenius};
    use proptest::prelude::*;

    fn diag(entries: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            entries.len(),
            entries.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    fn qubit() -> HilbertSpace {
        HilbertSpace::single(2).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let zero = DensityMatrix::new(qubit(), diag(&[1.0, 0.0])).unwrap();
        let one = DensityMatrix::new(qubit(), diag(&[0.0, 1.0])).unwrap();
        let mixed = DensityMatrix::new(qubit(), diag(&[0.5, 0.5])).unwrap();
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        // pure-vs-mixed closed form sqrt(<psi|sigma|psi>)
        assert!((fidelity(&zero, &mixed).unwrap() - 0.5f64.sqrt()).abs() < 1e-5);
        assert!((bures_angle(&zero, &one).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = random_state(2, 1, StateKind::Pure).unwrap();
        let b = random_state(3, 1, StateKind::Pure).unwrap();
        assert!(fidelity(&a, &b).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = project_spectrahedron(&diag(&[1.5, -0.5]), qubit()).unwrap();
        assert!(approx_eq(p.matrix(), &diag(&[1.0, 0.0]), 1e-12));
        let p = project_spectrahedron(&diag(&[0.6, 0.6]), qubit()).unwrap();
        assert!(approx_eq(p.matrix(), &diag(&[0.5, 0.5]), 1e-12));
        let rho = random_state(3, 9, StateKind::Mixed).unwrap();
        let p = project_spectrahedron(rho.matrix(), rho.space().clone()).unwrap();
        assert!(approx_eq(p.matrix(), rho.matrix(), 1e-12));
    }

    #[test]
    fn simplex_projection_by_enumeration() {
        // brute-force: scan a fine grid on the 2-simplex for the nearest point
        let v = [0.9, 0.4, -0.3];
        let p = project_simplex(&v);
        let mut best = (f64::INFINITY, [0.0; 3]);
        let n = 400;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let x = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
                let d: f64 = x.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
                if d < best.0 {
                    best = (d, x);
                }
            }
        }
        for k in 0..3 {
            assert!((p[k] - best.1[k]).abs() < 3.0 / n as f64);
        }
    }

    fn random_hermitian(seed: u64, d: usize) -> CMatrix {
        let a = random_state(d, seed, StateKind::Mixed).unwrap();
        let b = random_state(d, seed + 1000, StateKind::Mixed).unwrap();
        (a.matrix() - b.matrix()) * C64::new(3.0, 0.0) + a.matrix()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn fidelity_symmetric_and_unitarily_invariant(seed in 0u64..10_000) {
            let rho = random_state(3, seed, StateKind::Mixed).unwrap();
            let sigma = random_state(3, seed + 77, StateKind::Mixed).unwrap();
            let f1 = fidelity(&rho, &sigma).unwrap();
            let f2 = fidelity(&sigma, &rho).unwrap();
            prop_assert!((f1 - f2).abs() < 1e-9);
            let u = crate::operator::Operator::new(
                rho.space().clone(),
                expi_hermitian(&random_hermitian(seed + 5, 3)),
            ).unwrap();
            let fu = fidelity(&rho.evolve(&u).unwrap(), &sigma.evolve(&u).unwrap()).unwrap();
            prop_assert!((fu - f1).abs() < 1e-9);
            prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn projection_idempotent_and_nonexpansive(seed in 0u64..10_000) {
            let h = random_hermitian(seed, 3);
            let p = project_spectrahedron(&h, HilbertSpace::single(3).unwrap()).unwrap();
            let pp = project_spectrahedron(p.matrix(), HilbertSpace::single(3).unwrap()).unwrap();
            prop_assert!(approx_eq(p.matrix(), pp.matrix(), 1e-10));
            prop_assert!(DensityMatrix::new(p.space().clone(), p.matrix().clone()).is_ok());
            // non-expansion against a feasible point
            let feasible = random_state(3, seed + 31, StateKind::Mixed).unwrap();
            let before = frobenius(&(&h - feasible.matrix()));
            let after = frobenius(&(p.matrix() - feasible.matrix()));
            prop_assert!(after <= before + 1e-10);
        }
    }

    #[test]
    fn projection_nonexpansive_over_many_feasible_points() {
        let h = random_hermitian(4242, 4);
        let space = HilbertSpace::single(4).unwrap();
        let p = project_spectrahedron(&h, space).unwrap();
        for seed in 0..1000 {
            let kind = if seed % 2 == 0 { StateKind::Mixed } else { StateKind::Pure };
            let feasible = random_state(4, seed, kind).unwrap();
            let before = frobenius(&(&h - feasible.matrix()));
            let after = frobenius(&(p.matrix() - feasible.matrix()));
            assert!(after <= before + 1e-10);
        }
    }
}
