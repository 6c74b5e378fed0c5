//! Dense complex matrix helpers shared by the operator layer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// `(m + m†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest entry of `|m - m†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = hermitize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Rebuild `V f(Λ) V†` from an eigendecomposition.
pub fn spectral_apply(values: &DVector<f64>, vectors: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for k in 0..n {
        let fk = f(values[k]);
        for r in 0..n {
            scaled[(r, k)] *= fk;
        }
    }
    scaled * vectors.adjoint()
}

/// Principal square root of a positive semidefinite matrix. Negative
/// eigenvalues from roundoff are clamped to zero.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    spectral_apply(&vals, &vecs, |x| C64::new(x.max(0.0).sqrt(), 0.0))
}

/// `exp(i h)` for Hermitian `h`.
pub fn expi_hermitian(h: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(h);
    spectral_apply(&vals, &vecs, |x| C64::new(x.cos(), x.sin()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitize(m)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Matrix exponential of a general (non-Hermitian) matrix by scaling and
/// squaring with a Padé approximant.
pub fn expm(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

/// `a_i[j,k] ≈ b_i[j,k]` within an absolute tolerance.
pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
}
