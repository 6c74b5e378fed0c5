//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use hqrc::dynamics::{build_hamiltonian, ReservoirConfig, ReservoirParams};
use hqrc::operator::{annihilator, CMatrix, DensityMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Column-stacking Liouvillian: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
pub fn liouvillian(cfg: &ReservoirConfig, u: f64, input_active: bool) -> CMatrix {
    let space = cfg.space();
    let d = space.total_dim();
    let id = CMatrix::identity(d, d);
    let h = build_hamiltonian(cfg, u).unwrap().into_matrix();
    let mi = C64::new(0.0, -1.0);
    let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * mi;
    let dissipator = |op: &CMatrix, rate: f64| -> CMatrix {
        let n = op.adjoint() * op;
        (op.conjugate().kronecker(op) - id.kronecker(&n) * C64::from(0.5) - n.transpose().kronecker(&id) * C64::from(0.5))
            * C64::from(rate)
    };
    let sites: Vec<CMatrix> = (0..cfg.n_sites)
        .map(|j| annihilator(&space, cfg.site_mode(j)).unwrap().into_matrix())
        .collect();
    for c in &sites {
        l += dissipator(c, cfg.gamma);
    }
    if input_active {
        for k in 0..cfg.n_inputs() {
            let a = annihilator(&space, cfg.input_mode(k)).unwrap().into_matrix();
            let gk: f64 = cfg.w_in[k].iter().map(|w| w * w).sum::<f64>() / cfg.gamma;
            l += dissipator(&a, gk);
            for (j, c) in sites.iter().enumerate() {
                let w = C64::from(cfg.w_in[k][j]);
                // a ρ c† − c† a ρ + c ρ a† − ρ a† c
                let term = c.conjugate().kronecker(&a) - id.kronecker(&(c.adjoint() * &a)) + a.conjugate().kronecker(c)
                    - (a.adjoint() * c).transpose().kronecker(&id);
                l += term * w;
            }
        }
    }
    l
}

pub fn vec_col(m: &CMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

pub fn unvec_col(v: &nalgebra::DVector<C64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// `exp(L t) ρ0`.
pub fn exact_evolution(cfg: &ReservoirConfig, rho0: &CMatrix, u: f64, t: f64, input_active: bool) -> CMatrix {
    let l = liouvillian(cfg, u, input_active) * C64::from(t);
    let prop = l.exp();
    unvec_col(&(prop * vec_col(rho0)), rho0.nrows())
}

/// Random reservoir with total dimension at most 12, plus a drive value.
pub fn small_random_config(seed: u64) -> (ReservoirConfig, f64) {
    let layouts: [(usize, usize, Vec<usize>); 6] = [
        (1, 3, vec![2]),
        (1, 4, vec![2]),
        (2, 3, vec![]),
        (2, 2, vec![2]),
        (1, 4, vec![3]),
        (3, 2, vec![]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, cut, inputs) = layouts[rng.gen_range(0..layouts.len())].clone();
    let params = ReservoirParams {
        n_sites: n,
        site_cutoff: cut,
        input_cutoffs: inputs,
        onsite: rng.gen_range(0.0..0.5),
        nonlinearity: if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 },
        drive: rng.gen_range(0.0..1.0),
        input_scale: rng.gen_range(0.0..1.0),
        ..Default::default()
    };
    let cfg = params.sample(rng.gen()).unwrap();
    (cfg, rng.gen_range(-1.0..1.0))
}

pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    let herm = (&diff + diff.adjoint()) * C64::from(0.5);
    0.5 * herm.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}

pub fn random_density(cfg: &ReservoirConfig, seed: u64) -> DensityMatrix {
    let d = cfg.space().total_dim();
    let r = hqrc::operator::random_state(d, seed, hqrc::operator::StateKind::Mixed).unwrap();
    DensityMatrix::new(cfg.space(), r.into_matrix()).unwrap()
}
