use super::ReservoirConfig;
use crate::error::{QrcError, Result};
use crate::operator::linalg::I;
use crate::operator::{annihilator, CMatrix, DensityMatrix, Operator, C64};

pub(crate) struct ModeOps {
    pub sites: Vec<CMatrix>,
    pub inputs: Vec<CMatrix>,
}

pub(crate) fn mode_ops(cfg: &ReservoirConfig) -> ModeOps {
    let space = cfg.space();
    let op = |m| annihilator(&space, m).expect("mode in range").into_matrix();
    ModeOps {
        sites: (0..cfg.n_sites).map(|j| op(cfg.site_mode(j))).collect(),
        inputs: (0..cfg.n_inputs()).map(|k| op(cfg.input_mode(k))).collect(),
    }
}

/// Drive-independent part of the Hamiltonian.
pub(crate) fn static_hamiltonian(cfg: &ReservoirConfig, ops: &ModeOps) -> CMatrix {
    let d = cfg.space().total_dim();
    let mut h = CMatrix::zeros(d, d);
    for (j, c) in ops.sites.iter().enumerate() {
        let cd = c.adjoint();
        let n = &cd * c;
        h += &n * C64::from(cfg.onsite[j]);
        h += &cd * &cd * c * c * C64::from(cfg.nonlinearity[j]);
    }
    for e in &cfg.hopping {
        let hop = ops.sites[e.i].adjoint() * &ops.sites[e.j];
        h += (&hop + hop.adjoint()) * C64::from(e.value);
    }
    h
}

/// `Σ_j (c_j† + c_j)`.
pub(crate) fn drive_operator(ops: &ModeOps, d: usize) -> CMatrix {
    let mut x = CMatrix::zeros(d, d);
    for c in &ops.sites {
        x += c + c.adjoint();
    }
    x
}

/// Hamiltonian with drive `P + W u` on every site. Input modes enter only
/// through the cascaded dissipator.
pub fn build_hamiltonian(cfg: &ReservoirConfig, u: f64) -> Result<Operator> {
    cfg.validate()?;
    let ops = mode_ops(cfg);
    let d = cfg.space().total_dim();
    let h = static_hamiltonian(cfg, &ops) + drive_operator(&ops, d) * C64::from(cfg.drive_amplitude(u));
    Operator::new(cfg.space(), h)
}

fn dissipator(l: &CMatrix, rho: &CMatrix) -> CMatrix {
    let ld = l.adjoint();
    let ldl = &ld * l;
    l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::from(0.5)
}

/// Right-hand side of the master equation evaluated densely, term by term.
///
/// With `input_active` the input modes decay at `γ_k` and feed the sites
/// through `Σ W_jk ([a_k ρ, c_j†] + [c_j, ρ a_k†])`.
pub fn master_rhs(
    rho: &DensityMatrix,
    h: &Operator,
    cfg: &ReservoirConfig,
    input_active: bool,
) -> Result<CMatrix> {
    let space = cfg.space();
    if rho.space() != &space || h.space() != &space {
        return Err(QrcError::DimensionMismatch {
            expected: space.total_dim(),
            found: rho.dim(),
        });
    }
    let r = rho.matrix();
    let hm = h.matrix();
    let ops = mode_ops(cfg);
    let mut out = (hm * r - r * hm) * (-I);
    for c in &ops.sites {
        out += dissipator(c, r) * C64::from(cfg.gamma);
    }
    if input_active {
        for (k, a) in ops.inputs.iter().enumerate() {
            out += dissipator(a, r) * C64::from(cfg.input_decay(k));
            let ad = a.adjoint();
            for (j, c) in ops.sites.iter().enumerate() {
                let w = C64::from(cfg.w_in[k][j]);
                let cd = c.adjoint();
                let ar = a * r;
                let ra = r * &ad;
                out += (&ar * &cd - &cd * &ar + c * &ra - &ra * c) * w;
            }
        }
    }
    Ok(out)
}
