//! State and operator algebra on composite truncated bosonic Fock spaces.

pub mod linalg;
mod measures;
mod space;
mod states;
pub mod wigner;

use nalgebra::DVector;

pub use self::linalg::{CMatrix, C64};
pub use self::measures::{bures_angle, fidelity, project_simplex, project_spectrahedron, trace_distance};
pub use self::space::HilbertSpace;
pub use self::states::{basis_state, pure_state, random_state, squeeze_operator, thermal_state, StateKind};
pub(crate) use self::states::random_state_with;
pub(crate) use self::measures::fidelity_raw;
pub use self::wigner::{wigner, GridSpec, WignerGrid, WignerKernel};

use crate::error::{QrcError, Result};
use linalg::{hermiticity_defect, hermitize, min_eigenvalue, trace, ONE, ZERO};

/// Tolerance used by [`DensityMatrix`] validation.
pub const STATE_TOL: f64 = 1e-9;

/// A linear operator on a composite Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(QrcError::DimensionMismatch {
                expected: d,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dag(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        same_space(&self.space, &rhs.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn tensor(&self, rhs: &Operator) -> Self {
        Self {
            space: self.space.tensor(&rhs.space),
            matrix: self.matrix.kronecker(&rhs.matrix),
        }
    }

    /// `O ρ O†`, which need not be normalized.
    pub fn conjugate(&self, rho: &CMatrix) -> CMatrix {
        &self.matrix * rho * self.matrix.adjoint()
    }
}

/// Truncated lowering operator of `mode`, identity on every other mode.
pub fn annihilator(space: &HilbertSpace, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    let d = space.total_dim();
    let stride = space.strides()[mode];
    let mut m = CMatrix::zeros(d, d);
    for col in 0..d {
        let n = space.occupation(col, mode);
        if n > 0 {
            m[(col - stride, col)] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    Operator::new(space.clone(), m)
}

/// Number operator `a†a` of `mode`.
pub fn number_operator(space: &HilbertSpace, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    let d = space.total_dim();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = C64::new(space.occupation(i, mode) as f64, 0.0);
    }
    Operator::new(space.clone(), m)
}

/// A validated density matrix: Hermitian, unit trace and positive
/// semidefinite, each within [`STATE_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(QrcError::DimensionMismatch {
                expected: d,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let defect = hermiticity_defect(&matrix);
        if defect > STATE_TOL {
            return Err(QrcError::InvalidState(format!("not Hermitian (defect {defect:.3e})")));
        }
        let tr = trace(&matrix);
        if (tr - ONE).norm() > STATE_TOL {
            return Err(QrcError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let lmin = min_eigenvalue(&matrix);
        if lmin < -STATE_TOL {
            return Err(QrcError::InvalidState(format!("negative eigenvalue {lmin:.3e}")));
        }
        Ok(Self { space, matrix })
    }

    /// Hermitizes, renormalizes the trace and validates.
    pub fn from_hermitian(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let mut m = hermitize(&matrix);
        let tr = trace(&m).re;
        if tr.abs() < f64::MIN_POSITIVE || !tr.is_finite() {
            return Err(QrcError::InvalidState("zero trace".into()));
        }
        m /= C64::new(tr, 0.0);
        Self::new(space, m)
    }

    /// Skips validation; callers must guarantee the invariants.
    pub(crate) fn new_unchecked(space: HilbertSpace, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    /// All-vacuum state.
    pub fn vacuum(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        let mut m = CMatrix::zeros(d, d);
        m[(0, 0)] = ONE;
        Self::new_unchecked(space.clone(), m)
    }

    /// Maximally mixed state `I/D`.
    pub fn maximally_mixed(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self::new_unchecked(space.clone(), CMatrix::identity(d, d) / C64::new(d as f64, 0.0))
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        linalg::eigh(&self.matrix).0
    }

    /// `Tr(ρ O)`.
    pub fn expect(&self, op: &Operator) -> Result<C64> {
        same_space(&self.space, op.space())?;
        Ok((&self.matrix * op.matrix()).trace())
    }

    pub fn tensor(&self, rhs: &DensityMatrix) -> DensityMatrix {
        Self::new_unchecked(self.space.tensor(&rhs.space), self.matrix.kronecker(&rhs.matrix))
    }

    /// `U ρ U†` for unitary `U`.
    pub fn evolve(&self, u: &Operator) -> Result<DensityMatrix> {
        same_space(&self.space, u.space())?;
        let m = hermitize(&u.conjugate(&self.matrix));
        Ok(Self::new_unchecked(self.space.clone(), m))
    }

    /// Re-expresses the state in a larger single-space layout with the same
    /// number of modes, zero-padding each mode's Fock ladder.
    pub fn embed(&self, target: &HilbertSpace) -> Result<DensityMatrix> {
        if target.num_modes() != self.space.num_modes()
            || target
                .mode_dims()
                .iter()
                .zip(self.space.mode_dims())
                .any(|(t, s)| t < s)
        {
            return Err(QrcError::InvalidSpace(format!(
                "cannot embed {:?} into {:?}",
                self.space.mode_dims(),
                target.mode_dims()
            )));
        }
        let d = self.dim();
        let map: Vec<usize> = (0..d)
            .map(|i| {
                let digits = self.space.digits(i);
                digits
                    .iter()
                    .zip(target.strides())
                    .map(|(n, s)| n * s)
                    .sum()
            })
            .collect();
        let dt = target.total_dim();
        let mut m = CMatrix::zeros(dt, dt);
        for i in 0..d {
            for j in 0..d {
                m[(map[i], map[j])] = self.matrix[(i, j)];
            }
        }
        Ok(Self::new_unchecked(target.clone(), m))
    }
}

/// Reduced state on the modes in `keep`, returned in ascending mode order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.space(), rho.matrix(), keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let sub = rho.space().subspace(&kept)?;
    Ok(DensityMatrix::new_unchecked(sub, hermitize(&m)))
}

/// Partial trace of a raw matrix over the modes not in `keep`.
pub fn partial_trace_matrix(space: &HilbertSpace, m: &CMatrix, keep: &[usize]) -> Result<CMatrix> {
    if keep.is_empty() {
        return Err(crate::error::invalid("keep", "at least one mode must be kept"));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    for &k in &kept {
        space.check_mode(k)?;
    }
    let traced: Vec<usize> = (0..space.num_modes()).filter(|m| !kept.contains(m)).collect();
    let strides = space.strides();
    let offsets = |modes: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &md in modes {
            let dim = space.mode_dims()[md];
            let stride = strides[md];
            offs = offs
                .iter()
                .flat_map(|&o| (0..dim).map(move |n| o + n * stride))
                .collect();
        }
        offs
    };
    let keep_off = offsets(&kept);
    let trace_off = offsets(&traced);
    let dk = keep_off.len();
    let mut out = CMatrix::from_element(dk, dk, ZERO);
    for (a, &ia) in keep_off.iter().enumerate() {
        for (b, &ib) in keep_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &trace_off {
                acc += m[(ia + t, ib + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

fn same_space(a: &HilbertSpace, b: &HilbertSpace) -> Result<()> {
    if a.total_dim() != b.total_dim() {
        return Err(QrcError::DimensionMismatch {
            expected: a.total_dim(),
            found: b.total_dim(),
        });
    }
    Ok(())
}
