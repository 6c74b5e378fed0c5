use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::equation::{MasterEquation, Planes};
use super::ReservoirConfig;
use crate::error::{QrcError, Result};
use crate::operator::linalg::{frobenius, min_eigenvalue};
use crate::operator::{CMatrix, DensityMatrix, HilbertSpace, C64};

/// Shift used by the positivity check: `ρ + ε I` must admit a Cholesky factor.
pub const POSITIVITY_TOL: f64 = 1e-7;
/// Warmup residual above which the steady state is reported as not reached.
pub const STEADY_TOL: f64 = 1e-3;
/// Top-Fock-level population above which the cutoff is flagged.
pub const CUTOFF_TOL: f64 = 1e-3;

/// Physicality and truncation monitors accumulated over a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Integrated time since the vacuum start.
    pub elapsed: f64,
    /// Sum of `|Tr ρ − 1|` removed by renormalization at each sub-interval.
    pub trace_drift: f64,
    pub positivity_checks: usize,
    pub positivity_failures: usize,
    /// Most negative eigenvalue seen at a failed check (0 if none failed).
    pub worst_eigenvalue: f64,
    /// Largest top-Fock-level population of any site at a recorded time.
    pub max_top_population: f64,
}

impl Diagnostics {
    pub fn trace_ok(&self) -> bool {
        self.trace_drift <= 1e-9 * self.elapsed.max(1e-300)
    }

    pub fn positivity_ok(&self) -> bool {
        self.positivity_failures == 0
    }

    pub fn cutoff_ok(&self) -> bool {
        self.max_top_population < CUTOFF_TOL
    }

    pub fn merge(&mut self, other: &Diagnostics) {
        self.elapsed += other.elapsed;
        self.trace_drift += other.trace_drift;
        self.positivity_checks += other.positivity_checks;
        self.positivity_failures += other.positivity_failures;
        self.worst_eigenvalue = self.worst_eigenvalue.min(other.worst_eigenvalue);
        self.max_top_population = self.max_top_population.max(other.max_top_population);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmupReport {
    /// `‖ρ(t_init) − ρ(t_init − 0.5/γ)‖_F`.
    pub residual: f64,
    pub steady: bool,
}

/// `L x (K + 1)` design matrix: `N V` occupations per row, then a bias of 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
}

impl FeatureMatrix {
    /// Appends the bias column to raw feature rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let l = rows.len();
        if l == 0 {
            return Err(QrcError::InsufficientData("no feature rows".into()));
        }
        let k = rows[0].len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(QrcError::DimensionMismatch {
                expected: k,
                found: rows.iter().map(Vec::len).find(|&n| n != k).unwrap_or(k),
            });
        }
        let data = DMatrix::from_fn(l, k + 1, |i, j| if j == k { 1.0 } else { rows[i][j] });
        Ok(Self { data })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    /// `K + 1`.
    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// Rows `range`, bias included.
    pub fn rows(&self, start: usize, len: usize) -> FeatureMatrix {
        Self {
            data: self.data.rows(start, len).into_owned(),
        }
    }
}

/// A running reservoir: state, generator and monitors.
#[derive(Clone)]
pub struct Reservoir {
    cfg: ReservoirConfig,
    space: HilbertSpace,
    eq: MasterEquation,
    rho: Planes,
    input_active: bool,
    diag: Diagnostics,
    // occupation of each site in each basis state, site-major
    occ: Vec<usize>,
    k: [Planes; 4],
    tmp: Planes,
}

impl Reservoir {
    /// Starts from the all-vacuum state with the input coupling off.
    pub fn new(cfg: &ReservoirConfig) -> Result<Self> {
        cfg.validate()?;
        let space = cfg.space();
        let d = space.total_dim();
        let eq = MasterEquation::new(cfg);
        let mut rho = Planes::zeros(d);
        rho.re[0] = 1.0;
        let mut occ = Vec::with_capacity(cfg.n_sites * d);
        for j in 0..cfg.n_sites {
            let m = cfg.site_mode(j);
            occ.extend((0..d).map(|i| space.occupation(i, m)));
        }
        let zero = Planes::zeros(d);
        Ok(Self {
            cfg: cfg.clone(),
            space,
            eq,
            rho,
            input_active: false,
            diag: Diagnostics::default(),
            occ,
            k: [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            tmp: zero,
        })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.cfg
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diag
    }

    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::new_unchecked(self.space.clone(), self.rho.to_matrix())
    }

    pub fn set_state(&mut self, rho: &DensityMatrix) -> Result<()> {
        if rho.space() != &self.space {
            return Err(QrcError::DimensionMismatch {
                expected: self.space.total_dim(),
                found: rho.dim(),
            });
        }
        self.rho = Planes::from_matrix(rho.matrix());
        Ok(())
    }

    pub fn set_input_active(&mut self, active: bool) {
        self.input_active = active;
    }

    /// Evolves from vacuum under the constant drive `P` for `t_init`, input
    /// coupling off, and compares against the state `0.5/γ` earlier.
    pub fn warmup(&mut self) -> Result<WarmupReport> {
        self.input_active = false;
        let drive = self.cfg.drive;
        let t_init = self.cfg.t_init;
        let last = (0.5 / self.cfg.gamma).min(t_init);
        self.advance_chunked(t_init - last, drive)?;
        let before = self.rho.clone();
        self.advance_chunked(last, drive)?;
        let residual = frobenius(&(self.rho.to_matrix() - before.to_matrix()));
        let steady = residual <= STEADY_TOL;
        if !steady {
            log::warn!("warmup residual {residual:.3e} exceeds {STEADY_TOL:.0e}; steady state not reached");
        }
        self.record_checks();
        self.input_active = true;
        Ok(WarmupReport { residual, steady })
    }

    /// Replaces the input-mode marginal with `beta`.
    pub fn inject(&mut self, beta: &DensityMatrix) -> Result<()> {
        let out = inject_matrix(&self.rho.to_matrix(), &self.space, self.cfg.n_inputs(), beta)?;
        self.rho = Planes::from_matrix(&out);
        Ok(())
    }

    /// One input step: inject `beta` (if given), hold `u` for `τ`, and return
    /// the `N V` occupations in site-major, time-minor order.
    pub fn step(&mut self, u: f64, beta: Option<&DensityMatrix>) -> Result<Vec<f64>> {
        if let Some(b) = beta {
            self.inject(b)?;
        }
        let v = self.cfg.multiplex;
        let n = self.cfg.n_sites;
        let dt = self.cfg.tau / v as f64;
        let drive = self.cfg.drive_amplitude(u);
        let mut out = vec![0.0; n * v];
        for s in 0..v {
            self.advance(dt, drive)?;
            let occ = self.record_checks();
            for j in 0..n {
                out[j * v + s] = occ[j];
            }
        }
        Ok(out)
    }

    /// Current `⟨c_j† c_j⟩` for every site.
    pub fn occupations(&self) -> Vec<f64> {
        self.site_moments().0
    }

    fn site_moments(&self) -> (Vec<f64>, f64) {
        let d = self.eq.dim();
        let top = self.cfg.site_cutoff - 1;
        let mut n = vec![0.0; self.cfg.n_sites];
        let mut worst_top: f64 = 0.0;
        for (j, nj) in n.iter_mut().enumerate() {
            let occ = &self.occ[j * d..(j + 1) * d];
            let mut top_pop = 0.0;
            for i in 0..d {
                let p = self.rho.re[i * d + i];
                *nj += p * occ[i] as f64;
                if occ[i] == top {
                    top_pop += p;
                }
            }
            worst_top = worst_top.max(top_pop);
        }
        (n, worst_top)
    }

    fn record_checks(&mut self) -> Vec<f64> {
        let (n, top) = self.site_moments();
        self.diag.max_top_population = self.diag.max_top_population.max(top);
        let d = self.eq.dim();
        let rho = self.rho.to_matrix();
        let shifted = &rho + CMatrix::identity(d, d) * C64::from(POSITIVITY_TOL);
        self.diag.positivity_checks += 1;
        if shifted.cholesky().is_none() {
            let lmin = min_eigenvalue(&rho);
            if lmin < -POSITIVITY_TOL {
                self.diag.positivity_failures += 1;
                self.diag.worst_eigenvalue = self.diag.worst_eigenvalue.min(lmin);
            }
        }
        n
    }

    fn advance_chunked(&mut self, duration: f64, drive: f64) -> Result<()> {
        let chunk = self.cfg.tau / self.cfg.multiplex as f64;
        let pieces = (duration / chunk - 1e-9).ceil().max(0.0) as usize;
        for _ in 0..pieces {
            self.advance(duration / pieces as f64, drive)?;
        }
        Ok(())
    }

    /// RK4 over `duration` with a step no larger than `cfg.dt`, then
    /// Hermitize and renormalize.
    fn advance(&mut self, duration: f64, drive: f64) -> Result<()> {
        if duration <= 0.0 {
            return Ok(());
        }
        let steps = (duration / self.cfg.dt - 1e-9).ceil().max(1.0) as usize;
        let h = duration / steps as f64;
        let gen = self.eq.generator(drive, self.input_active);
        for _ in 0..steps {
            let [k1, k2, k3, k4] = &mut self.k;
            gen.rhs(&self.rho, k1);
            self.tmp.set_axpy(&self.rho, 0.5 * h, k1);
            gen.rhs(&self.tmp, k2);
            self.tmp.set_axpy(&self.rho, 0.5 * h, k2);
            gen.rhs(&self.tmp, k3);
            self.tmp.set_axpy(&self.rho, h, k3);
            gen.rhs(&self.tmp, k4);
            let c = h / 6.0;
            for (plane, (p1, p2, p3, p4)) in [
                (&mut self.rho.re, (&k1.re, &k2.re, &k3.re, &k4.re)),
                (&mut self.rho.im, (&k1.im, &k2.im, &k3.im, &k4.im)),
            ] {
                for (i, r) in plane.iter_mut().enumerate() {
                    *r += c * (p1[i] + 2.0 * (p2[i] + p3[i]) + p4[i]);
                }
            }
        }
        self.diag.elapsed += duration;
        if !self.rho.is_finite() {
            return Err(QrcError::NonFinite {
                time: self.diag.elapsed,
            });
        }
        let tr = self.rho.trace();
        self.diag.trace_drift += (tr - 1.0).abs();
        self.rho.hermitize_scaled(1.0 / tr);
        Ok(())
    }
}

fn inject_matrix(
    rho: &CMatrix,
    space: &HilbertSpace,
    n_inputs: usize,
    beta: &DensityMatrix,
) -> Result<CMatrix> {
    let d_in: usize = space.mode_dims()[..n_inputs].iter().product();
    if n_inputs == 0 || beta.dim() != d_in || beta.space().mode_dims() != &space.mode_dims()[..n_inputs] {
        return Err(QrcError::DimensionMismatch {
            expected: d_in,
            found: beta.dim(),
        });
    }
    let d_r = space.total_dim() / d_in;
    let mut reduced = CMatrix::zeros(d_r, d_r);
    for t in 0..d_in {
        reduced += rho.view((t * d_r, t * d_r), (d_r, d_r));
    }
    Ok(beta.matrix().kronecker(&reduced))
}

/// `β ⊗ Tr_inputs(ρ)` in the canonical layout (inputs first).
pub fn inject(rho: &DensityMatrix, cfg: &ReservoirConfig, beta: &DensityMatrix) -> Result<DensityMatrix> {
    let space = cfg.space();
    if rho.space() != &space {
        return Err(QrcError::DimensionMismatch {
            expected: space.total_dim(),
            found: rho.dim(),
        });
    }
    let m = inject_matrix(rho.matrix(), &space, cfg.n_inputs(), beta)?;
    Ok(DensityMatrix::new_unchecked(space, m))
}

/// Evolves `rho0` through piecewise-constant segments `(duration, u)`.
pub fn integrate(
    rho0: &DensityMatrix,
    cfg: &ReservoirConfig,
    segments: &[(f64, f64)],
    input_active: bool,
) -> Result<DensityMatrix> {
    let mut r = Reservoir::new(cfg)?;
    r.set_state(rho0)?;
    r.input_active = input_active;
    for &(duration, u) in segments {
        if duration < 0.0 {
            return Err(crate::error::invalid("duration", "must be non-negative"));
        }
        r.advance(duration, cfg.drive_amplitude(u))?;
    }
    Ok(r.state())
}

/// Steady state reached from vacuum after `t_init`.
pub fn warmup(cfg: &ReservoirConfig) -> Result<DensityMatrix> {
    let mut r = Reservoir::new(cfg)?;
    r.warmup()?;
    Ok(r.state())
}

/// Warmup, then one [`Reservoir::step`] per input. `beta` must be empty for a
/// reservoir without input modes.
pub fn run_sequence(cfg: &ReservoirConfig, u: &[f64], beta: &[DensityMatrix]) -> Result<FeatureMatrix> {
    Ok(run_sequence_with_diagnostics(cfg, u, beta)?.0)
}

pub fn run_sequence_with_diagnostics(
    cfg: &ReservoirConfig,
    u: &[f64],
    beta: &[DensityMatrix],
) -> Result<(FeatureMatrix, Diagnostics)> {
    if u.is_empty() {
        return Err(QrcError::InsufficientData("empty input sequence".into()));
    }
    let expected = if cfg.n_inputs() == 0 { 0 } else { u.len() };
    if beta.len() != expected {
        return Err(QrcError::DimensionMismatch {
            expected,
            found: beta.len(),
        });
    }
    let mut r = Reservoir::new(cfg)?;
    r.warmup()?;
    let mut rows = Vec::with_capacity(u.len());
    for (l, &ul) in u.iter().enumerate() {
        rows.push(r.step(ul, beta.get(l))?);
    }
    Ok((FeatureMatrix::from_rows(&rows)?, r.diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ReservoirParams;
    use crate::operator::linalg::{approx_eq, trace};
    use crate::operator::{partial_trace, random_state, StateKind};

    fn small(seed: u64) -> ReservoirConfig {
        ReservoirParams {
            n_sites: 2,
            multiplex: 4,
            ..Default::default()
        }
        .sample(seed)
        .unwrap()
    }

    #[test]
    fn vacuum_is_fixed_without_drive() {
        let mut cfg = small(1);
        cfg.drive = 0.0;
        let vac = DensityMatrix::vacuum(&cfg.space());
        let out = integrate(&vac, &cfg, &[(2.0, 0.0)], true).unwrap();
        assert!(approx_eq(out.matrix(), vac.matrix(), 1e-15));
    }

    #[test]
    fn warmup_without_drive_is_vacuum() {
        let mut cfg = small(2);
        cfg.drive = 0.0;
        let mut r = Reservoir::new(&cfg).unwrap();
        let rep = r.warmup().unwrap();
        assert_eq!(rep.residual, 0.0);
        assert!(rep.steady);
    }

    #[test]
    fn weak_drive_warmup_residual_decays() {
        // transients relax as e^{-γt/2}; five units leave ~1e-2, ten units ~1e-3
        let cfg = ReservoirParams::default().sample(3).unwrap();
        let mut r = Reservoir::new(&cfg).unwrap();
        let short = r.warmup().unwrap();
        let mut long_cfg = cfg.clone();
        long_cfg.t_init = 12.0;
        let mut r = Reservoir::new(&long_cfg).unwrap();
        let long = r.warmup().unwrap();
        assert!(long.residual < STEADY_TOL, "residual {}", long.residual);
        let ratio = long.residual / short.residual;
        let expect = (-0.5 * 7.0f64).exp();
        assert!(ratio < 3.0 * expect && ratio > expect / 3.0, "ratio {ratio}");
    }

    #[test]
    fn single_site_warmup_is_coherent() {
        // α̇ = -(γ/2) α - iP from vacuum: α(t) = -2iP(1 - e^{-γt/2})/γ
        let cfg = ReservoirParams {
            n_sites: 1,
            site_cutoff: 12,
            input_cutoffs: vec![],
            drive: 0.3,
            ..Default::default()
        }
        .sample(0)
        .unwrap();
        let rho = warmup(&cfg).unwrap();
        let alpha = 2.0 * 0.3 * (1.0 - (-2.5f64).exp());
        let n: f64 = (0..12).map(|k| k as f64 * rho.matrix()[(k, k)].re).sum();
        assert!((n - alpha * alpha).abs() < 1e-8, "{n} vs {}", alpha * alpha);
        // <a> = Σ sqrt(k) ρ_{k, k-1}
        let a: C64 = (1..12).map(|k| rho.matrix()[(k, k - 1)] * (k as f64).sqrt()).sum();
        assert!((a - C64::new(0.0, -alpha)).norm() < 1e-8);
    }

    #[test]
    fn warmup_step_refinement() {
        let cfg = small(4);
        let coarse = warmup(&cfg).unwrap();
        let mut fine_cfg = cfg.clone();
        fine_cfg.dt = cfg.dt / 2.0;
        let fine = warmup(&fine_cfg).unwrap();
        assert!(approx_eq(coarse.matrix(), fine.matrix(), 1e-7));
    }

    #[test]
    fn inject_replaces_input_marginal() {
        let cfg = small(5);
        let d = cfg.space().total_dim();
        let rho = DensityMatrix::new(cfg.space(), random_state(d, 3, StateKind::Mixed).unwrap().into_matrix()).unwrap();
        let beta = random_state(2, 9, StateKind::Pure).unwrap();
        let out = inject(&rho, &cfg, &beta).unwrap();
        let sites: Vec<usize> = (0..cfg.n_sites).map(|j| cfg.site_mode(j)).collect();
        let before = partial_trace(&rho, &sites).unwrap();
        let after = partial_trace(&out, &sites).unwrap();
        assert!(approx_eq(before.matrix(), after.matrix(), 1e-12));
        let input = partial_trace(&out, &[0]).unwrap();
        assert!(approx_eq(input.matrix(), beta.matrix(), 1e-12));
        assert!((trace(out.matrix()).re - 1.0).abs() < 1e-12);
        assert!(inject(&rho, &cfg, &random_state(3, 1, StateKind::Pure).unwrap()).is_err());
    }

    #[test]
    fn feature_layout_and_determinism() {
        let cfg = small(6);
        let u = [0.2, -0.4, 0.9];
        let beta: Vec<_> = (0..3).map(|s| random_state(2, s, StateKind::Pure).unwrap()).collect();
        let f = run_sequence(&cfg, &u, &beta).unwrap();
        assert_eq!(f.ncols(), cfg.n_sites * cfg.multiplex + 1);
        assert!(f.matrix().column(f.ncols() - 1).iter().all(|&b| b == 1.0));
        let g = run_sequence(&cfg, &u, &beta).unwrap();
        assert_eq!(f, g);
        // site-major: column j*V + v is site j at sub-step v
        let mut r = Reservoir::new(&cfg).unwrap();
        r.warmup().unwrap();
        r.step(u[0], Some(&beta[0])).unwrap();
        let occ = r.occupations();
        for j in 0..cfg.n_sites {
            assert_eq!(f.matrix()[(0, j * cfg.multiplex + cfg.multiplex - 1)], occ[j]);
        }
    }

    #[test]
    fn periodic_steady_rows() {
        let cfg = small(7);
        let vac = DensityMatrix::vacuum(&cfg.input_space().unwrap());
        let beta = vec![vac; 40];
        let f = run_sequence(&cfg, &[0.0; 40], &beta).unwrap();
        let m = f.matrix();
        for j in 0..m.ncols() {
            assert!((m[(38, j)] - m[(39, j)]).abs() < 1e-6);
        }
    }

    #[test]
    fn physicality_monitors() {
        let cfg = small(8);
        let beta: Vec<_> = (0..20).map(|s| random_state(2, s, StateKind::Pure).unwrap()).collect();
        let u: Vec<f64> = (0..20).map(|l| (l as f64 * 0.7).sin()).collect();
        let (_, diag) = run_sequence_with_diagnostics(&cfg, &u, &beta).unwrap();
        assert!(diag.trace_ok(), "{diag:?}");
        assert!(diag.positivity_ok(), "{diag:?}");
        assert_eq!(diag.positivity_checks, 1 + 20 * cfg.multiplex);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let cfg = small(9);
        assert!(run_sequence(&cfg, &[0.0, 1.0], &[]).is_err());
        assert!(run_sequence(&cfg, &[], &[]).is_err());
    }
}
