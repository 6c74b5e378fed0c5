use crate::error::{invalid, QrcError, Result};
use crate::operator::linalg::{hermitize, kron, ONE, ZERO};
use crate::operator::{CMatrix, DensityMatrix, HilbertSpace, Operator, C64};

/// Tolerance on `Σ K†K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// A channel in Kraus form, `N(ρ) = Σ K ρ K†`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    kraus_ops: Vec<Operator>,
}

impl KrausChannel {
    pub fn new(kraus_ops: Vec<Operator>) -> Result<Self> {
        let first = kraus_ops
            .first()
            .ok_or_else(|| invalid("kraus_ops", "at least one operator required"))?;
        let space = first.space().clone();
        let d = space.total_dim();
        let mut sum = CMatrix::zeros(d, d);
        for k in &kraus_ops {
            if k.space() != &space {
                return Err(QrcError::DimensionMismatch {
                    expected: d,
                    found: k.space().total_dim(),
                });
            }
            sum += k.matrix().adjoint() * k.matrix();
        }
        let defect = (sum - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > COMPLETENESS_TOL {
            return Err(invalid("kraus_ops", format!("not trace preserving (defect {defect:.3e})")));
        }
        Ok(Self { kraus_ops })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(vec![Operator::identity(&HilbertSpace::single(dim)?)])
    }

    pub fn kraus_ops(&self) -> &[Operator] {
        &self.kraus_ops
    }

    pub fn space(&self) -> &HilbertSpace {
        self.kraus_ops[0].space()
    }

    pub fn dim(&self) -> usize {
        self.space().total_dim()
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for k in &self.kraus_ops {
            out += k.conjugate(rho);
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.space() != self.space() {
            return Err(QrcError::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        DensityMatrix::new(rho.space().clone(), hermitize(&self.apply_matrix(rho.matrix())))
    }

    /// `self ∘ other`, i.e. `other` acts first.
    pub fn compose(&self, other: &KrausChannel) -> Result<Self> {
        let mut ops = Vec::with_capacity(self.kraus_ops.len() * other.kraus_ops.len());
        for a in &self.kraus_ops {
            for b in &other.kraus_ops {
                ops.push(a.compose(b)?);
            }
        }
        Self::new(ops)
    }
}

/// Generalized Pauli basis `X^a Z^b`, `a, b = 0..D`, ordered with `a`
/// outermost. Each element is unitary, so `Tr U_i† U_j = D δ_ij`.
pub fn weyl_basis(dim: usize) -> Result<Vec<CMatrix>> {
    HilbertSpace::single(dim)?;
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / dim as f64);
    let mut basis = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            // X^a Z^b |j> = ω^{bj} |j + a>
            let mut u = CMatrix::zeros(dim, dim);
            for j in 0..dim {
                u[((j + a) % dim, j)] = omega((b * j) % dim);
            }
            basis.push(u);
        }
    }
    Ok(basis)
}

/// `N(ρ) = (1 − q) ρ + q I/D` with Kraus operators `√(1−q) I` and
/// `(√q / D) U_i` over the Weyl basis.
pub fn depolarizing_channel(q: f64, dim: usize) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", format!("{q} outside [0, 1]")));
    }
    let space = HilbertSpace::single(dim)?;
    let mut ops = Vec::new();
    if q < 1.0 {
        let id = CMatrix::identity(dim, dim) * C64::from((1.0 - q).sqrt());
        ops.push(Operator::new(space.clone(), id)?);
    }
    if q > 0.0 {
        let scale = C64::from(q.sqrt() / dim as f64);
        for u in weyl_basis(dim)? {
            ops.push(Operator::new(space.clone(), u * scale)?);
        }
    }
    KrausChannel::new(ops)
}

/// `|ψ_s⟩⟨ψ_s|` with `ψ_s = √s|0⟩ + √(1−s)|1⟩`.
pub fn switch_control_state(s: f64) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid("s", format!("{s} outside [0, 1]")));
    }
    let v = [s.sqrt(), (1.0 - s).sqrt()];
    Ok(CMatrix::from_fn(2, 2, |i, j| C64::from(v[i] * v[j])))
}

/// Quantum switch of `ch_a` and `ch_b` controlled by `ψ_s`; returns the joint
/// state on system ⊗ control qubit (control index fastest).
pub fn quantum_switch(
    rho: &DensityMatrix,
    s: f64,
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
) -> Result<DensityMatrix> {
    let d = rho.dim();
    if ch_a.dim() != d || ch_b.dim() != d {
        return Err(QrcError::DimensionMismatch {
            expected: d,
            found: if ch_a.dim() != d { ch_a.dim() } else { ch_b.dim() },
        });
    }
    let ctrl = switch_control_state(s)?;
    let joint = kron(rho.matrix(), &ctrl);
    let p0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
    let p1 = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
    let mut out = CMatrix::zeros(2 * d, 2 * d);
    for ka in ch_a.kraus_ops() {
        for kb in ch_b.kraus_ops() {
            let ab = ka.matrix() * kb.matrix();
            let ba = kb.matrix() * ka.matrix();
            let w = kron(&ab, &p0) + kron(&ba, &p1);
            out += &w * &joint * w.adjoint();
        }
    }
    let space = rho.space().tensor(&HilbertSpace::single(2)?);
    DensityMatrix::new(space, hermitize(&out))
}

/// Blocks `⟨a|σ|b⟩` of a joint system ⊗ qubit matrix, indexed `[a][b]`.
pub fn control_blocks(joint: &CMatrix) -> [[CMatrix; 2]; 2] {
    let d = joint.nrows() / 2;
    let block = |a: usize, b: usize| CMatrix::from_fn(d, d, |i, j| joint[(2 * i + a, 2 * j + b)]);
    [[block(0, 0), block(0, 1)], [block(1, 0), block(1, 1)]]
}

/// Closed-form blocks `(A00, A01, A11)` of the switch of two depolarizing
/// channels; `A10 = A01†`.
pub fn depolarizing_switch_blocks(
    rho: &CMatrix,
    s: f64,
    q_a: f64,
    q_b: f64,
) -> (CMatrix, CMatrix, CMatrix) {
    let d = rho.nrows();
    let mixed = CMatrix::identity(d, d) / C64::from(d as f64);
    let keep = (1.0 - q_a) * (1.0 - q_b);
    // both orders give the same depolarizing composition
    let serial = rho * C64::from(keep) + &mixed * C64::from(1.0 - keep);
    let a00 = &serial * C64::from(s);
    let a11 = &serial * C64::from(1.0 - s);
    let cross = rho * C64::from(q_a * q_b / (d * d) as f64 + keep)
        + &mixed * C64::from(q_a * (1.0 - q_b) + q_b * (1.0 - q_a));
    let a01 = cross * C64::from((s * (1.0 - s)).sqrt());
    (a00, a01, a11)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::linalg::approx_eq;
    use crate::operator::{basis_state, random_state, StateKind};

    #[test]
    fn weyl_basis_is_orthogonal() {
        for d in [2, 3, 4] {
            let b = weyl_basis(d).unwrap();
            assert_eq!(b.len(), d * d);
            for (i, u) in b.iter().enumerate() {
                for (j, v) in b.iter().enumerate() {
                    let ip = (u.adjoint() * v).trace();
                    let expect = if i == j { d as f64 } else { 0.0 };
                    assert!((ip - C64::from(expect)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn depolarizing_examples() {
        let rho = basis_state(2, 0).unwrap();
        let half = depolarizing_channel(0.5, 2).unwrap().apply(&rho).unwrap();
        assert!((half.matrix()[(0, 0)].re - 0.75).abs() < 1e-12);
        assert!((half.matrix()[(1, 1)].re - 0.25).abs() < 1e-12);
        assert!(half.matrix()[(0, 1)].norm() < 1e-12);

        let r = random_state(3, 2, StateKind::Mixed).unwrap();
        let id = depolarizing_channel(0.0, 3).unwrap().apply(&r).unwrap();
        assert!(approx_eq(id.matrix(), r.matrix(), 1e-14));
        let full = depolarizing_channel(1.0, 3).unwrap().apply(&r).unwrap();
        let mixed = CMatrix::identity(3, 3) / C64::from(3.0);
        assert!(approx_eq(full.matrix(), &mixed, 1e-12));
        assert!(depolarizing_channel(1.2, 2).is_err());
    }

    #[test]
    fn rejects_incomplete_kraus_set() {
        let space = HilbertSpace::single(2).unwrap();
        let half = Operator::new(space, CMatrix::identity(2, 2) * C64::from(0.5)).unwrap();
        assert!(KrausChannel::new(vec![half]).is_err());
    }

    #[test]
    fn switch_extremes() {
        let a = depolarizing_channel(0.3, 2).unwrap();
        let b = depolarizing_channel(0.6, 2).unwrap();
        let rho = random_state(2, 4, StateKind::Pure).unwrap();
        let ab = a.apply_matrix(&b.apply_matrix(rho.matrix()));
        let out = quantum_switch(&rho, 1.0, &a, &b).unwrap();
        let blocks = control_blocks(out.matrix());
        assert!(approx_eq(&blocks[0][0], &ab, 1e-12));
        assert!(blocks[1][1].iter().all(|z| z.norm() < 1e-14));
        let out = quantum_switch(&rho, 0.0, &a, &b).unwrap();
        let blocks = control_blocks(out.matrix());
        let ba = b.apply_matrix(&a.apply_matrix(rho.matrix()));
        assert!(approx_eq(&blocks[1][1], &ba, 1e-12));
        assert!(blocks[0][1].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn full_depolarization_off_diagonal() {
        let ch = depolarizing_channel(1.0, 2).unwrap();
        let rho = random_state(2, 9, StateKind::Mixed).unwrap();
        let out = quantum_switch(&rho, 0.5, &ch, &ch).unwrap();
        let blocks = control_blocks(out.matrix());
        assert!(approx_eq(&blocks[0][1], &(rho.matrix() / C64::from(8.0)), 1e-12));
    }

    #[test]
    fn switch_dimension_mismatch() {
        let a = depolarizing_channel(0.3, 2).unwrap();
        let b = depolarizing_channel(0.3, 3).unwrap();
        let rho = basis_state(2, 0).unwrap();
        assert!(quantum_switch(&rho, 0.5, &a, &b).is_err());
    }
}
