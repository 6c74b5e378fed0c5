use hqrc::dynamics::FeatureMatrix;
use hqrc::metrics::{
    autocorrelation_timescale, bures_distance_matrix, distance_correlation_sq, memory_capacity_classical,
    quantum_memory_capacity, rmsf, state_distance_correlation, vpt,
};
use hqrc::operator::linalg::expi_hermitian;
use hqrc::operator::{bures_angle, random_state, CMatrix, DensityMatrix, HilbertSpace, Operator, StateKind, C64};
use hqrc::readout::vectorize_density;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textbook double-centred distance covariance, written with explicit loops.
fn brute_dcov(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let centre = |v: &[f64]| -> Vec<Vec<f64>> {
        let d: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|k| (v[j] - v[k]).abs()).collect()).collect();
        let mut row = vec![0.0; n];
        let mut col = vec![0.0; n];
        let mut all = 0.0;
        for j in 0..n {
            for k in 0..n {
                row[j] += d[j][k] / n as f64;
                col[k] += d[j][k] / n as f64;
                all += d[j][k] / (n * n) as f64;
            }
        }
        (0..n)
            .map(|j| (0..n).map(|k| d[j][k] - row[j] - col[k] + all).collect())
            .collect()
    };
    let (a, b) = (centre(x), centre(y));
    let mut s = 0.0;
    for j in 0..n {
        for k in 0..n {
            s += a[j][k] * b[j][k];
        }
    }
    s / (n * n) as f64
}

fn dist(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(v.len(), v.len(), |j, k| (v[j] - v[k]).abs())
}

fn random_states(n: usize, dim: usize, seed: u64) -> Vec<DensityMatrix> {
    (0..n)
        .map(|i| random_state(dim, seed * 1000 + i as u64, StateKind::Mixed).unwrap())
        .collect()
}

fn random_unitary(dim: usize, seed: u64) -> Operator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        g[(i, i)] = C64::from(rng.gen_range(-2.0..2.0));
        for j in (i + 1)..dim {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    Operator::new(HilbertSpace::single(dim).unwrap(), expi_hermitian(&g)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn distance_correlation_matches_brute_force(
        x in prop::collection::vec(-3.0f64..3.0, 4),
        y in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let vxy = brute_dcov(&x, &y);
        let vxx = brute_dcov(&x, &x);
        let vyy = brute_dcov(&y, &y);
        prop_assume!(vxx > 1e-6 && vyy > 1e-6);
        let oracle = (vxy / (vxx * vyy).sqrt()).max(0.0);
        let got = distance_correlation_sq(&dist(&x), &dist(&y)).unwrap();
        prop_assert!((got - oracle).abs() < 1e-12, "{} vs {}", got, oracle);
    }

    #[test]
    fn distance_correlation_is_permutation_equivariant(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..12).map(|_| rng.gen()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v + 0.1 * rng.gen::<f64>()).collect();
        let mut perm: Vec<usize> = (0..12).collect();
        for i in (1..12).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let px: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
        let py: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let a = distance_correlation_sq(&dist(&x), &dist(&y)).unwrap();
        let b = distance_correlation_sq(&dist(&px), &dist(&py)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }
}

#[test]
fn bures_matrix_matches_pairwise_angles_and_is_unitarily_invariant() {
    let states = random_states(6, 3, 1);
    let m = bures_distance_matrix(&states);
    for j in 0..6 {
        assert_eq!(m[(j, j)], 0.0);
        for k in 0..6 {
            let direct = bures_angle(&states[j], &states[k]).unwrap();
            assert!((m[(j, k)] - direct).abs() < 1e-9);
            assert_eq!(m[(j, k)], m[(k, j)]);
        }
    }
    let u = random_unitary(3, 9);
    let rotated: Vec<DensityMatrix> = states.iter().map(|s| s.evolve(&u).unwrap()).collect();
    let r = bures_distance_matrix(&rotated);
    assert!((r - m).abs().max() < 1e-7);
}

#[test]
fn identical_state_sequences_have_unit_r2() {
    let x = random_states(40, 2, 3);
    let r2 = state_distance_correlation(&x, &x).unwrap();
    assert!((r2 - 1.0).abs() < 1e-12, "{r2}");
}

#[test]
fn independent_state_sequences_have_small_r2() {
    let x = random_states(200, 2, 4);
    let y = random_states(200, 2, 5);
    let r2 = state_distance_correlation(&x, &y).unwrap();
    assert!(r2 < 0.1, "{r2}");
}

#[test]
fn classical_capacity_of_a_delay_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u: Vec<f64> = (0..600).map(|_| rng.gen()).collect();
    let rows: Vec<Vec<f64>> = (0..u.len())
        .map(|l| (0..=5).map(|d| if l >= d { u[l - d] } else { 0.0 }).collect())
        .collect();
    let f = FeatureMatrix::from_rows(&rows).unwrap();
    let p = memory_capacity_classical(&f, &u, 10).unwrap();
    for d in 0..=5 {
        assert!(p.values[d] > 1.0 - 1e-6, "C2({d}) = {}", p.values[d]);
    }
    for d in 6..=10 {
        assert!(p.values[d] < 0.1, "C2({d}) = {}", p.values[d]);
    }
    assert!((p.capacity - p.values.iter().sum::<f64>()).abs() < 1e-15);
    assert!(p.values.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn classical_capacity_of_unrelated_features_is_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u: Vec<f64> = (0..600).map(|_| rng.gen()).collect();
    let rows: Vec<Vec<f64>> = (0..u.len()).map(|_| (0..4).map(|_| rng.gen()).collect()).collect();
    let f = FeatureMatrix::from_rows(&rows).unwrap();
    let p = memory_capacity_classical(&f, &u, 3).unwrap();
    assert!(p.values.iter().all(|&v| v < 0.1), "{:?}", p.values);
}

#[test]
fn quantum_capacity_of_a_state_delay_line() {
    let inputs = random_states(300, 2, 6);
    let rows: Vec<Vec<f64>> = (0..inputs.len())
        .map(|l| {
            (0..=1)
                .flat_map(|d| vectorize_density(inputs[l.saturating_sub(d)].matrix()))
                .collect()
        })
        .collect();
    let f = FeatureMatrix::from_rows(&rows).unwrap();
    let p = quantum_memory_capacity(&f, &inputs, 4).unwrap();
    assert!((p.values[0] - 1.0).abs() < 1e-6, "{:?}", p.values);
    assert!((p.values[1] - 1.0).abs() < 1e-6, "{:?}", p.values);
    assert!(p.values[3] < 0.2, "{:?}", p.values);
}

#[test]
fn autocorrelation_zero_crossings() {
    let period = 24.0;
    let traces: Vec<Vec<f64>> = (0..3)
        .map(|j| {
            (0..2400)
                .map(|i| (2.0 * std::f64::consts::PI * i as f64 / period + j as f64).cos())
                .collect()
        })
        .collect();
    let a = autocorrelation_timescale(&traces, 0.5).unwrap();
    assert!(a.crossed);
    assert!((a.crossing - 0.5 * period / 4.0).abs() < 0.05, "{}", a.crossing);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>() - 0.5).collect();
    let a = autocorrelation_timescale(&[noise], 1.0).unwrap();
    assert!(a.crossed && a.crossing <= 2.0, "{}", a.crossing);

    let ramp: Vec<f64> = (0..10).map(|i| (i as f64).powi(3)).collect();
    let a = autocorrelation_timescale(&[ramp], 1.0).unwrap();
    assert!((a.curve[0] - {
        let m = (0..10).map(|i| (i as f64).powi(3)).sum::<f64>() / 10.0;
        (0..10).map(|i| ((i as f64).powi(3) - m).powi(2)).sum::<f64>() / 10.0
    })
    .abs()
        < 1e-9);
}

#[test]
fn score_arithmetic() {
    let a = random_state(2, 1, StateKind::Pure).unwrap();
    assert!((rmsf(&[a.clone()], &[a.clone()]).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(vpt(&[0.1, 0.3, 0.31, 0.2], 0.3), 2);
}
