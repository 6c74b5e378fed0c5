//! Sparse evaluation of the master equation on split real/imaginary planes.
//!
//! The generator is written as `ρ̇ = Y + Y†` with
//! `Y = K ρ + Σ_r c_r A_r ρ B_r†`, where `K` collects the Hamiltonian and the
//! anticommutator parts of every dissipator and the pairs `(A, B)` the jump
//! terms (`c_j` with itself, `a_k` with itself, and `a_k` with each `c_j`).
//! Every jump operator lowers a single mode, so `A ρ B†` is a scaled double
//! shift of `ρ`: `(A ρ B†)[i, l] = f_A(i) f_B(l) ρ[i + s_A, l + s_B]`.

use super::hamiltonian::{drive_operator, mode_ops, static_hamiltonian};
use super::ReservoirConfig;
use crate::operator::linalg::I;
use crate::operator::{CMatrix, HilbertSpace, C64};

/// Row-major `n x n` complex matrix stored as two real planes.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Planes {
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Planes {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            re: vec![0.0; n * n],
            im: vec![0.0; n * n],
        }
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut p = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                p.re[i * n + j] = m[(i, j)].re;
                p.im[i * n + j] = m[(i, j)].im;
            }
        }
        p
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.n;
        CMatrix::from_fn(n, n, |i, j| C64::new(self.re[i * n + j], self.im[i * n + j]))
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|x| x.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.re[i * self.n + i]).sum()
    }

    /// `self = x + a y`.
    pub fn set_axpy(&mut self, x: &Planes, a: f64, y: &Planes) {
        for ((o, &xi), &yi) in self.re.iter_mut().zip(&x.re).zip(&y.re) {
            *o = xi + a * yi;
        }
        for ((o, &xi), &yi) in self.im.iter_mut().zip(&x.im).zip(&y.im) {
            *o = xi + a * yi;
        }
    }

    /// Symmetrizes to `(m + m†)/2` and scales by `s`.
    pub fn hermitize_scaled(&mut self, s: f64) {
        let n = self.n;
        for i in 0..n {
            self.re[i * n + i] *= s;
            self.im[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let (a, b) = (i * n + j, j * n + i);
                let re = 0.5 * s * (self.re[a] + self.re[b]);
                let im = 0.5 * s * (self.im[a] - self.im[b]);
                self.re[a] = re;
                self.re[b] = re;
                self.im[a] = im;
                self.im[b] = -im;
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Csr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Csr {
    fn from_dense(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut indptr = vec![0];
        let (mut indices, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    indices.push(j);
                    re.push(v.re);
                    im.push(v.im);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            re,
            im,
        }
    }

    /// `self + scale * other`, entries merged row by row.
    fn add_scaled(&self, other: &Csr, scale: f64) -> Csr {
        let mut m = CMatrix::zeros(self.n, self.n);
        for (src, s) in [(self, 1.0), (other, scale)] {
            for i in 0..src.n {
                for p in src.indptr[i]..src.indptr[i + 1] {
                    m[(i, src.indices[p])] += C64::new(src.re[p], src.im[p]) * s;
                }
            }
        }
        Csr::from_dense(&m)
    }

    /// `out += S m`.
    fn mul_acc(&self, m: &Planes, out: &mut Planes) {
        let n = self.n;
        for i in 0..n {
            let o_re = &mut out.re[i * n..(i + 1) * n];
            let o_im = &mut out.im[i * n..(i + 1) * n];
            for p in self.indptr[i]..self.indptr[i + 1] {
                let (sr, si) = (self.re[p], self.im[p]);
                let r = self.indices[p] * n;
                let m_re = &m.re[r..r + n];
                let m_im = &m.im[r..r + n];
                if si == 0.0 {
                    for k in 0..n {
                        o_re[k] += sr * m_re[k];
                        o_im[k] += sr * m_im[k];
                    }
                } else if sr == 0.0 {
                    for k in 0..n {
                        o_re[k] -= si * m_im[k];
                        o_im[k] += si * m_re[k];
                    }
                } else {
                    for k in 0..n {
                        o_re[k] += sr * m_re[k] - si * m_im[k];
                        o_im[k] += sr * m_im[k] + si * m_re[k];
                    }
                }
            }
        }
    }
}

/// Lowering operator of one mode: `A|i> = f(i)|i - s>`, i.e.
/// `A[i, i + s] = f(i)` with `f(i) = sqrt(n(i) + 1)` below the cutoff.
#[derive(Clone, Debug)]
struct Shift {
    stride: usize,
    factor: Vec<f64>,
}

impl Shift {
    fn lowering(space: &HilbertSpace, mode: usize) -> Self {
        let d = space.total_dim();
        let dim = space.mode_dims()[mode];
        let factor = (0..d)
            .map(|i| {
                let n = space.occupation(i, mode);
                if n + 1 < dim {
                    ((n + 1) as f64).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            stride: space.strides()[mode],
            factor,
        }
    }
}

#[derive(Clone, Debug)]
struct JumpPair {
    a: Shift,
    b: Shift,
    coeff: f64,
}

impl JumpPair {
    /// `out += coeff A ρ B†`.
    fn apply(&self, rho: &Planes, out: &mut Planes) {
        let n = rho.n;
        let (sa, sb) = (self.a.stride, self.b.stride);
        let fb = &self.b.factor[..n - sb];
        for i in 0..n - sa {
            let fa = self.a.factor[i];
            if fa == 0.0 {
                continue;
            }
            let c = self.coeff * fa;
            let src = (i + sa) * n + sb;
            let r_re = &rho.re[src..src + n - sb];
            let r_im = &rho.im[src..src + n - sb];
            let o_re = &mut out.re[i * n..i * n + n - sb];
            let o_im = &mut out.im[i * n..i * n + n - sb];
            for l in 0..n - sb {
                let w = c * fb[l];
                o_re[l] += w * r_re[l];
                o_im[l] += w * r_im[l];
            }
        }
    }
}

/// Precomputed generator for one reservoir configuration.
#[derive(Clone, Debug)]
pub(crate) struct MasterEquation {
    dim: usize,
    // K without drive; index 0 input inactive, 1 active
    k_static: [Csr; 2],
    // -i Σ (c† + c)
    k_drive: Csr,
    jumps: [Vec<JumpPair>; 2],
}

impl MasterEquation {
    pub fn new(cfg: &ReservoirConfig) -> Self {
        let space = cfg.space();
        let ops = mode_ops(cfg);
        let d = space.total_dim();
        let g = cfg.gamma;

        let mut k_off = static_hamiltonian(cfg, &ops) * (-I);
        let mut site_jumps = Vec::new();
        for (j, c) in ops.sites.iter().enumerate() {
            k_off -= c.adjoint() * c * C64::from(0.5 * g);
            let s = Shift::lowering(&space, cfg.site_mode(j));
            site_jumps.push(JumpPair {
                a: s.clone(),
                b: s,
                coeff: 0.5 * g,
            });
        }
        let mut k_on = k_off.clone();
        let mut active_jumps = site_jumps.clone();
        for (k, a) in ops.inputs.iter().enumerate() {
            let gk = cfg.input_decay(k);
            k_on -= a.adjoint() * a * C64::from(0.5 * gk);
            let sa = Shift::lowering(&space, cfg.input_mode(k));
            if gk > 0.0 {
                active_jumps.push(JumpPair {
                    a: sa.clone(),
                    b: sa.clone(),
                    coeff: 0.5 * gk,
                });
            }
            for (j, c) in ops.sites.iter().enumerate() {
                let w = cfg.w_in[k][j];
                if w == 0.0 {
                    continue;
                }
                k_on -= c.adjoint() * a * C64::from(w);
                active_jumps.push(JumpPair {
                    a: sa.clone(),
                    b: Shift::lowering(&space, cfg.site_mode(j)),
                    coeff: w,
                });
            }
        }
        Self {
            dim: d,
            k_static: [Csr::from_dense(&k_off), Csr::from_dense(&k_on)],
            k_drive: Csr::from_dense(&(drive_operator(&ops, d) * (-I))),
            jumps: [site_jumps, active_jumps],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Freezes the drive amplitude and the input gate.
    pub fn generator(&self, drive: f64, active: bool) -> Generator<'_> {
        let idx = usize::from(active);
        let k = if drive == 0.0 {
            self.k_static[idx].clone()
        } else {
            self.k_static[idx].add_scaled(&self.k_drive, drive)
        };
        Generator {
            k,
            jumps: &self.jumps[idx],
        }
    }
}

/// Generator at fixed drive, ready for repeated evaluation.
pub(crate) struct Generator<'a> {
    k: Csr,
    jumps: &'a [JumpPair],
}

impl Generator<'_> {
    /// `out = ρ̇` for Hermitian `rho`.
    pub fn rhs(&self, rho: &Planes, out: &mut Planes) {
        out.re.fill(0.0);
        out.im.fill(0.0);
        self.k.mul_acc(rho, out);
        for pair in self.jumps {
            pair.apply(rho, out);
        }
        // Y + Y† = 2 herm(Y)
        out.hermitize_scaled(2.0);
    }
}
