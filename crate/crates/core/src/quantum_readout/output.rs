//! Reduced states of passive output modes `C_m = Σ_j o_mj c_j`.
//!
//! A single-mode state follows from normally ordered moments,
//! `ρ_ab = Σ_k (−1)^k / (k! √(a! b!)) ⟨C†^{b+k} C^{a+k}⟩`, which are finite sums
//! because the candidate modes carry a bounded photon number. The moments of
//! `C` expand multinomially in the candidate moments `Tr(ρ c†^p c^q)`, which
//! do not depend on the mixer and are computed once per reservoir state.

use std::collections::HashMap;

use crate::error::{invalid, QrcError, Result};
use crate::operator::linalg::hermitize;
use crate::operator::{annihilator, project_spectrahedron, CMatrix, DensityMatrix, HilbertSpace, C64};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Multi-indices `a` with `a_j < dims[j]`, ordered by total then lexicographically.
fn multi_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut all = vec![vec![]];
    for &d in dims {
        all = all
            .into_iter()
            .flat_map(|a: Vec<usize>| {
                (0..d).map(move |k| {
                    let mut b = a.clone();
                    b.push(k);
                    b
                })
            })
            .collect();
    }
    all.sort_by_key(|a| (a.iter().sum::<usize>(), a.clone()));
    all
}

/// Candidate-mode moments `μ(p, q) = Tr(ρ c†^p c^q)` of one state.
#[derive(Clone, Debug)]
pub struct ModeMoments {
    multi: Vec<Vec<usize>>,
    totals: Vec<usize>,
    /// Nonzero `(p, q, μ)` with `|t_p − t_q| ≤ band`.
    entries: Vec<(u32, u32, C64)>,
    band: usize,
    n_cap: usize,
}

impl ModeMoments {
    pub fn new(rho: &CMatrix, space: &HilbertSpace, modes: &[usize]) -> Result<Self> {
        Self::banded(rho, space, modes, usize::MAX)
    }

    /// Keeps only moments whose photon-number orders differ by at most
    /// `band`; an output cutoff `D` needs `band ≥ D − 1`.
    pub fn banded(rho: &CMatrix, space: &HilbertSpace, modes: &[usize], band: usize) -> Result<Self> {
        let d = space.total_dim();
        if rho.nrows() != d {
            return Err(QrcError::DimensionMismatch {
                expected: d,
                found: rho.nrows(),
            });
        }
        if let Some(&m) = modes.iter().find(|&&m| m >= space.num_modes()) {
            return Err(QrcError::ModeOutOfRange {
                mode: m,
                modes: space.num_modes(),
            });
        }
        let dims: Vec<usize> = modes.iter().map(|&m| space.mode_dims()[m]).collect();
        let strides: Vec<usize> = modes.iter().map(|&m| space.strides()[m]).collect();
        let multi = multi_indices(&dims);
        let totals: Vec<usize> = multi.iter().map(|a| a.iter().sum()).collect();
        let digits: Vec<Vec<usize>> = (0..d)
            .map(|i| modes.iter().map(|&m| space.occupation(i, m)).collect())
            .collect();
        // ladder[q][x] = <x + q| c^q |x> factor, 0 when x + q leaves the space
        let ladder: Vec<Vec<f64>> = multi
            .iter()
            .map(|q| {
                digits
                    .iter()
                    .map(|dx| {
                        let mut f = 1.0;
                        for j in 0..q.len() {
                            let top = dx[j] + q[j];
                            if top >= dims[j] {
                                return 0.0;
                            }
                            f *= ((dx[j] + 1)..=top).map(|k| k as f64).product::<f64>().sqrt();
                        }
                        f
                    })
                    .collect()
            })
            .collect();
        let shifts: Vec<usize> = multi
            .iter()
            .map(|a| a.iter().zip(&strides).map(|(a, s)| a * s).sum())
            .collect();
        let mut entries = Vec::new();
        for (ip, fp) in ladder.iter().enumerate() {
            for (iq, fq) in ladder.iter().enumerate() {
                if totals[ip].abs_diff(totals[iq]) > band {
                    continue;
                }
                let mut acc = C64::new(0.0, 0.0);
                for x in 0..d {
                    let f = fp[x] * fq[x];
                    if f != 0.0 {
                        acc += rho[(x + shifts[iq], x + shifts[ip])] * f;
                    }
                }
                if acc != C64::new(0.0, 0.0) {
                    entries.push((ip as u32, iq as u32, acc));
                }
            }
        }
        let n_cap = dims.iter().map(|d| d - 1).sum();
        Ok(Self {
            multi,
            totals,
            entries,
            band,
            n_cap,
        })
    }

    pub fn n_candidates(&self) -> usize {
        self.multi[0].len()
    }

    /// Stored moments.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Largest total photon number the candidates can hold.
    pub fn photon_cap(&self) -> usize {
        self.n_cap
    }

    /// `v_q = (|q|! / Π q_j!) Π o_j^{q_j}` for one mixer row.
    pub fn coefficient_vector(&self, row: &[C64]) -> Result<Vec<C64>> {
        if row.len() != self.n_candidates() {
            return Err(QrcError::DimensionMismatch {
                expected: self.n_candidates(),
                found: row.len(),
            });
        }
        Ok(self
            .multi
            .iter()
            .zip(&self.totals)
            .map(|(q, &t)| {
                let mut c = C64::from(factorial(t));
                for (j, &qj) in q.iter().enumerate() {
                    c *= row[j].powu(qj as u32) / factorial(qj);
                }
                c
            })
            .collect())
    }

    /// `E[n][m] = ⟨C†^n C^m⟩` for `n, m ≤ n_cap` within the band.
    fn number_moments(&self, v: &[C64]) -> Vec<Vec<C64>> {
        let k = self.n_cap + 1;
        let mut e = vec![vec![C64::new(0.0, 0.0); k]; k];
        for &(ip, iq, mu) in &self.entries {
            let (ip, iq) = (ip as usize, iq as usize);
            e[self.totals[ip]][self.totals[iq]] += v[ip].conj() * v[iq] * mu;
        }
        e
    }

    /// Output-mode state on the lowest `cutoff` Fock levels (unnormalized)
    /// and the population above them.
    pub fn single_mode_matrix(&self, v: &[C64], cutoff: usize) -> Result<(CMatrix, f64)> {
        if cutoff == 0 || cutoff - 1 > self.band {
            return Err(invalid("cutoff", format!("moments were kept for cutoffs up to {}", self.band.saturating_add(1))));
        }
        if v.len() != self.multi.len() {
            return Err(QrcError::DimensionMismatch {
                expected: self.multi.len(),
                found: v.len(),
            });
        }
        let e = self.number_moments(v);
        let mut m = CMatrix::zeros(cutoff, cutoff);
        for a in 0..cutoff.min(self.n_cap + 1) {
            for b in 0..cutoff.min(self.n_cap + 1) {
                let mut acc = C64::new(0.0, 0.0);
                let top = self.n_cap - a.max(b);
                for k in 0..=top {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    acc += e[b + k][a + k] * (sign / factorial(k));
                }
                m[(a, b)] = acc / (factorial(a) * factorial(b)).sqrt();
            }
        }
        let total = e[0][0].re;
        let kept: f64 = (0..cutoff).map(|i| m[(i, i)].re).sum();
        Ok((m, (total - kept).max(0.0)))
    }
}

/// Reduced output state with the population lost to the output cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputState {
    pub state: DensityMatrix,
    pub lost: f64,
}

fn finalize(m: CMatrix, space: HilbertSpace, cutoff: usize, lost: f64) -> Result<OutputState> {
    let kept = m.trace().re;
    if !(kept > 1e-12) {
        return Err(QrcError::CutoffOverflow { cutoff, lost });
    }
    let h = hermitize(&m);
    let state = match DensityMatrix::from_hermitian(space.clone(), h.clone()) {
        Ok(s) => s,
        Err(_) => project_spectrahedron(&(h / C64::from(kept)), space)?,
    };
    Ok(OutputState { state, lost })
}

/// Single output mode from precomputed moments.
pub fn output_from_moments(moments: &ModeMoments, v: &[C64], cutoff: usize) -> Result<OutputState> {
    let (m, lost) = moments.single_mode_matrix(v, cutoff)?;
    finalize(m, HilbertSpace::single(cutoff)?, cutoff, lost)
}

/// Reduced state of the output modes given by the rows of `o`, each on
/// `cutoff` Fock levels and renormalized after truncation.
pub fn output_state(rho: &DensityMatrix, modes: &[usize], o: &CMatrix, cutoff: usize) -> Result<OutputState> {
    if o.ncols() != modes.len() {
        return Err(QrcError::DimensionMismatch {
            expected: modes.len(),
            found: o.ncols(),
        });
    }
    if cutoff < 2 {
        return Err(invalid("cutoff", "output modes need at least 2 levels"));
    }
    if o.nrows() == 1 {
        let moments = ModeMoments::banded(rho.matrix(), rho.space(), modes, cutoff - 1)?;
        let row: Vec<C64> = o.row(0).iter().copied().collect();
        let v = moments.coefficient_vector(&row)?;
        return output_from_moments(&moments, &v, cutoff);
    }
    output_state_dense(rho, modes, o, cutoff)
}

/// Same as [`output_state`] using explicit operator powers on the full
/// space; works for any number of output modes.
pub fn output_state_dense(rho: &DensityMatrix, modes: &[usize], o: &CMatrix, cutoff: usize) -> Result<OutputState> {
    let space = rho.space();
    let d = space.total_dim();
    let m_out = o.nrows();
    let mut c_ops = Vec::with_capacity(m_out);
    for i in 0..m_out {
        let mut c = CMatrix::zeros(d, d);
        for (j, &mode) in modes.iter().enumerate() {
            c += annihilator(space, mode)?.into_matrix() * o[(i, j)];
        }
        c_ops.push(c);
    }
    let n_cap: usize = modes.iter().map(|&m| space.mode_dims()[m] - 1).sum();
    // A(a) = Π_i C_i^{a_i} for every a with |a| ≤ n_cap
    let mut powers: HashMap<Vec<usize>, CMatrix> = HashMap::new();
    let all = multi_indices(&vec![n_cap + 1; m_out]);
    for a in all.iter().filter(|a| a.iter().sum::<usize>() <= n_cap) {
        let op = match a.iter().position(|&x| x > 0) {
            None => CMatrix::identity(d, d),
            Some(i) => {
                let mut prev = a.clone();
                prev[i] -= 1;
                &c_ops[i] * &powers[&prev]
            }
        };
        powers.insert(a.clone(), op);
    }
    let out_space = HilbertSpace::new(vec![cutoff; m_out])?;
    let levels = multi_indices(&vec![cutoff; m_out]);
    let index = |a: &[usize]| a.iter().fold(0, |acc, &x| acc * cutoff + x);
    let mut out = CMatrix::zeros(out_space.total_dim(), out_space.total_dim());
    let ks = multi_indices(&vec![n_cap + 1; m_out]);
    for a in &levels {
        for b in &levels {
            let mut acc = C64::new(0.0, 0.0);
            for k in &ks {
                let ak: Vec<usize> = a.iter().zip(k).map(|(x, y)| x + y).collect();
                let bk: Vec<usize> = b.iter().zip(k).map(|(x, y)| x + y).collect();
                let (Some(pa), Some(pb)) = (powers.get(&ak), powers.get(&bk)) else {
                    continue;
                };
                let mut w = 1.0;
                for i in 0..m_out {
                    let sign = if k[i] % 2 == 0 { 1.0 } else { -1.0 };
                    w *= sign / (factorial(k[i]) * (factorial(a[i]) * factorial(b[i])).sqrt());
                }
                // Tr(A(a+k) ρ A(b+k)†)
                let t = pa * rho.matrix();
                let tr: C64 = t.iter().zip(pb.iter()).map(|(x, y)| x * y.conj()).sum();
                acc += tr * w;
            }
            out[(index(a), index(b))] = acc;
        }
    }
    let kept = out.trace().re;
    finalize(out, out_space, cutoff, (1.0 - kept).max(0.0))
}
