//! One (sweep point, trial) evaluation per task.

use std::collections::BTreeMap;
use std::ops::Range;

use anyhow::{anyhow, bail, ensure, Context, Result};
use hqrc::dynamics::{run_sequence_with_diagnostics, Diagnostics, FeatureMatrix, Reservoir, ReservoirParams, CUTOFF_TOL};
use hqrc::metrics::{
    autocorrelation_timescale, ew_curve, ew_error, memory_capacity_classical, nrmse_curve, quantum_memory_capacity,
    rmsf, ser, variance, vpt,
};
use hqrc::operator::{DensityMatrix, GridSpec, HilbertSpace, WignerGrid, WignerKernel};
use hqrc::quantum_readout::{train_quantum_readout, ReadoutSpec, TrainSpec};
use hqrc::readout::{
    closed_loop_generate, default_eta, esn_run, quantize_symbol, reconstruct_density, ridge_fit, vectorize_density,
    EsnConfig, Perturbation, ReadoutWeights,
};
use hqrc::tasks::{
    control_signal, control_task_sequence, cv_target, cv_task_sequence, depolarizing_task_sequence,
    gen_equalizer_data, InputStates, SwitchTask,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::spec::{CutoffPolicy, ExperimentSpec, Lengths, TaskKind, TaskOptions};

/// Equalizer steps dropped at the start and end of the target window.
pub const HEAD_TRIM: usize = 7;
pub const TAIL_TRIM: usize = 2;

/// Distance below which a perturbed closed loop counts as recovered.
pub const RECOVERY_TOL: f64 = 0.05;

#[derive(Clone, Debug, Default)]
pub struct CellOutcome {
    pub metrics: Vec<(String, f64)>,
    pub extras: Option<Value>,
    pub grids: Vec<(String, WignerGrid)>,
}

impl CellOutcome {
    fn push(&mut self, name: &str, value: f64) {
        self.metrics.push((name.to_string(), value));
    }

    fn push_diagnostics(&mut self, d: &Diagnostics) {
        self.push("trace_drift_rate", d.trace_drift / d.elapsed.max(f64::MIN_POSITIVE));
        self.push("min_eigenvalue", d.worst_eigenvalue);
        self.push("positivity_failures", d.positivity_failures as f64);
        self.push("max_top_population", d.max_top_population);
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(m, _)| m == name).map(|(_, v)| *v)
    }
}

/// Fully resolved inputs of one cell.
#[derive(Clone, Debug)]
pub struct Cell {
    pub task: TaskKind,
    pub reservoir: ReservoirParams,
    pub options: TaskOptions,
    pub lengths: Lengths,
    pub seed: u64,
}

impl Cell {
    pub fn resolve(spec: &ExperimentSpec, point: &BTreeMap<String, f64>, seed: u64) -> Result<Self> {
        let mut reservoir = spec.reservoir();
        let mut options = spec.options.clone();
        for (key, &v) in point {
            let n = v as usize;
            match key.as_str() {
                "w" => reservoir.input_scale = v,
                "p" => reservoir.drive = v,
                "n" => reservoir.n_sites = n,
                "v" => reservoir.multiplex = n,
                "d" => options.delay = n,
                "f" => options.f = v,
                "nodes" => options.esn_nodes = n,
                "n_r" => options.n_r = Some(n),
                "q" => {
                    options.q_a = v;
                    options.q_b = v;
                }
                "snr_db" => options.snr_db = v,
                "d_c" => options.d_c = n,
                "d_q" => options.d_q = n,
                other => bail!("unknown sweep axis `{other}`"),
            }
        }
        if let Some(inputs) = options.inputs {
            reservoir.input_cutoffs = vec![inputs.dim()];
        }
        if let Some(n_r) = options.n_r {
            reservoir.n_sites = options
                .mode_set
                .sites_for(n_r, reservoir.input_cutoffs.len())
                .ok_or_else(|| anyhow!("no site count gives N_R = {n_r} for {:?}", options.mode_set))?;
        }
        Ok(Self {
            task: spec.task,
            reservoir,
            options,
            lengths: spec.lengths(),
            seed,
        })
    }

    /// Runs the cell, raising the site cutoff when requested by the policy.
    pub fn run(&self) -> Result<CellOutcome> {
        let mut cell = self.clone();
        let mut raised = 0;
        loop {
            let mut out = cell.run_once()?;
            let top = out.metric("max_top_population").unwrap_or(0.0);
            if cell.options.cutoff_policy == CutoffPolicy::Raise && top >= CUTOFF_TOL && raised < 2 {
                log::warn!(
                    "top Fock population {top:.2e} at cutoff {}, retrying with {}",
                    cell.reservoir.site_cutoff,
                    cell.reservoir.site_cutoff + 1
                );
                cell.reservoir.site_cutoff += 1;
                raised += 1;
                continue;
            }
            if top >= CUTOFF_TOL {
                log::warn!("top Fock population {top:.2e} exceeds {CUTOFF_TOL:.0e}");
            }
            if raised > 0 {
                out.push("site_cutoff", cell.reservoir.site_cutoff as f64);
            }
            return Ok(out);
        }
    }

    fn run_once(&self) -> Result<CellOutcome> {
        match self.task {
            TaskKind::SwitchEqualizer => self.switch_equalizer(),
            TaskKind::EsnBaseline => self.esn_baseline(),
            TaskKind::CvNontemporal => self.cv_nontemporal(),
            TaskKind::CvClosedLoop => self.cv_closed_loop(),
            TaskKind::DepolarizingPrep => self.depolarizing_prep(),
            TaskKind::MemoryCapacity => self.memory_capacity(),
        }
    }

    fn data_seed(&self) -> u64 {
        crate::run::mix_seed(self.seed, 0xDA7A, 1)
    }

    fn affine(&self, u: &[f64]) -> Vec<f64> {
        match self.options.input_affine {
            Some([a, b]) => u.iter().map(|x| a * x + b).collect(),
            None => u.to_vec(),
        }
    }

    fn quantum_inputs(&self, fallback: impl Fn(usize) -> InputStates) -> Result<InputStates> {
        if let Some(i) = self.options.inputs {
            return Ok(i);
        }
        let dim = *self
            .reservoir
            .input_cutoffs
            .first()
            .ok_or_else(|| anyhow!("task needs a quantum input mode"))?;
        Ok(fallback(dim))
    }

    /// Equalizer target window relative to the first target: training then
    /// evaluation.
    fn equalizer_windows(&self) -> (Range<usize>, Range<usize>, usize) {
        let l = self.lengths;
        let start = l.washout.max(HEAD_TRIM);
        let train = start..start + l.train;
        let eval = train.end..train.end + l.eval;
        let offset = self.options.delay.max(2);
        let length = offset + eval.end + TAIL_TRIM;
        (train, eval, length)
    }

    fn switch_equalizer(&self) -> Result<CellOutcome> {
        let o = &self.options;
        let (train, eval, length) = self.equalizer_windows();
        let task = SwitchTask {
            length,
            q_a: o.q_a,
            q_b: o.q_b,
            delay: o.delay,
            snr_db: o.snr_db,
            target: o.switch_target,
        };
        let data = task.generate(self.data_seed())?;
        let cfg = self.reservoir.sample(self.seed)?;
        let (features, diag) = run_sequence_with_diagnostics(&cfg, &self.affine(&data.u), &data.beta)?;
        let x = features.rows(data.offset, data.targets.len());
        let space = data.targets.states[0].space().clone();

        let states = &data.targets.states;
        let y = vectorized(states);
        let pred = fit_predict(&x, &y, &train, &eval)?;
        let predicted = reconstruct_all(&pred, &space)?;
        let truth = &states[eval.clone()];

        let sym = DMatrix::from_fn(data.targets.len(), 1, |i, _| data.targets.symbols[i] as f64);
        let sym_pred = fit_predict(&x, &sym, &train, &eval)?;
        let symbols: Vec<i32> = sym_pred.column(0).iter().map(|&v| quantize_symbol(v)).collect();

        let mut out = CellOutcome::default();
        out.push("rmsf", rmsf(truth, &predicted)?);
        out.push("ser", ser(&data.targets.symbols[eval.clone()], &symbols)?);
        out.push_diagnostics(&diag);
        if o.grid_samples > 0 {
            let samples: Vec<Value> = (0..o.grid_samples.min(truth.len()))
                .map(|t| {
                    json!({
                        "step": data.offset + eval.start + t,
                        "target": vectorize_density(truth[t].matrix()),
                        "predicted": vectorize_density(predicted[t].matrix()),
                    })
                })
                .collect();
            out.extras = Some(json!({ "density_samples": samples }));
        }
        Ok(out)
    }

    fn esn_baseline(&self) -> Result<CellOutcome> {
        let o = &self.options;
        let (train, eval, length) = self.equalizer_windows();
        let eq = gen_equalizer_data(length, self.data_seed(), o.snr_db)?;
        let cfg = EsnConfig {
            nodes: o.esn_nodes,
            connection_probability: o.esn_connection_probability,
            spectral_radius: o.esn_spectral_radius,
            input_scale: o.esn_input_scale,
            seed: self.seed,
        };
        let features = esn_run(&cfg, &self.affine(&eq.u))?;
        let offset = o.delay.max(2);
        let n = length - offset;
        let x = features.rows(offset, n);
        let targets: Vec<i32> = (offset..length).map(|l| eq.symbols[l - o.delay]).collect();
        let y = DMatrix::from_fn(n, 1, |i, _| targets[i] as f64);
        let pred = fit_predict(&x, &y, &train, &eval)?;
        let symbols: Vec<i32> = pred.column(0).iter().map(|&v| quantize_symbol(v)).collect();
        let mut out = CellOutcome::default();
        out.push("ser", ser(&targets[eval], &symbols)?);
        Ok(out)
    }

    fn cv_nontemporal(&self) -> Result<CellOutcome> {
        let o = &self.options;
        let l = self.lengths;
        let inputs = self.quantum_inputs(|cutoff| InputStates::Thermal { cutoff })?;
        let data = cv_task_sequence(l.washout + l.train + l.eval, self.data_seed(), o.encoding, inputs)?;
        let cfg = self.reservoir.sample(self.seed)?;
        let (x, diag) = run_sequence_with_diagnostics(&cfg, &self.affine(&data.u), &data.beta)?;
        let train = l.washout..l.washout + l.train;
        let eval = train.end..train.end + l.eval;
        let space = data.targets.states[0].space().clone();
        let pred = fit_predict(&x, &vectorized(&data.targets.states), &train, &eval)?;
        let predicted = reconstruct_all(&pred, &space)?;
        let truth = &data.targets.states[eval.clone()];

        let kernel = WignerKernel::new(GridSpec::default(), space.total_dim());
        let wt = wigner_all(&kernel, truth)?;
        let wp = wigner_all(&kernel, &predicted)?;
        let mut out = CellOutcome::default();
        out.push("rmsf", rmsf(truth, &predicted)?);
        out.push("ew", ew_error(&values(&wt), &values(&wp))?);
        out.push_diagnostics(&diag);
        push_grids(&mut out, &wt, &wp, eval.start, o.grid_samples);
        Ok(out)
    }

    fn cv_closed_loop(&self) -> Result<CellOutcome> {
        let o = &self.options;
        let l = self.lengths;
        let steps = l.eval;
        let inputs = self.quantum_inputs(|cutoff| InputStates::Thermal { cutoff })?;
        let open = l.washout + l.train;
        let data = control_task_sequence(open, self.data_seed(), o.f, o.encoding, inputs)?;
        let cfg = self.reservoir.sample(self.seed)?;
        let mut reservoir = Reservoir::new(&cfg)?;
        reservoir.warmup()?;
        let mut rows = Vec::with_capacity(open);
        for (u, beta) in data.u.iter().zip(&data.beta) {
            rows.push(reservoir.step(*u, Some(beta))?);
        }
        let x = FeatureMatrix::from_rows(&rows)?;
        let train = l.washout..open;
        let fit = |y: &DMatrix<f64>| -> Result<ReadoutWeights> {
            let xt = x.rows(train.start, train.len());
            let yt = y.rows(train.start, train.len()).into_owned();
            Ok(ridge_fit(&xt, &yt, default_eta(&xt))?)
        };
        let next = fit(&DMatrix::from_fn(open, 1, |i, _| data.targets.scalars[i]))?;
        let tomo = fit(&vectorized(&data.targets.states))?;
        let u0 = next.predict_row(rows.last().expect("open loop is non-empty"))?[0];

        let beta_source = inputs.sample_many(steps, crate::run::mix_seed(self.seed, 0xB57A, 2))?;
        let mut perturbed = reservoir.clone();
        let run = closed_loop_generate(&mut reservoir, &next, Some(&tomo), &beta_source, u0, steps, None)?;
        // control fed at closed-loop step t is s at index open + 1 + t
        let truth_next: Vec<f64> = (0..steps).map(|t| control_signal(open + 2 + t, o.f)).collect();
        let truth_in: Vec<f64> = (0..steps).map(|t| control_signal(open + 1 + t, o.f)).collect();
        let nrmse = nrmse_curve(&truth_next, &run.predictions, variance(&data.s[train.clone()]))?;

        let space = data.targets.states[0].space().clone();
        let kernel = WignerKernel::new(GridSpec::default(), space.total_dim());
        let targets = beta_source
            .iter()
            .zip(&truth_in)
            .map(|(b, &s)| cv_target(b, s, o.encoding))
            .collect::<hqrc::Result<Vec<_>>>()?;
        let predicted = run
            .tomography
            .iter()
            .map(|y| reconstruct_density(y.as_slice(), &space))
            .collect::<hqrc::Result<Vec<_>>>()?;
        let wt = wigner_all(&kernel, &targets)?;
        let wp = wigner_all(&kernel, &predicted)?;
        let ew = ew_curve(&values(&wt), &values(&wp))?;

        let mut out = CellOutcome::default();
        let at = |c: &[f64], t: usize| c.get(t.min(c.len()) - 1).copied().unwrap_or(f64::NAN);
        out.push("nrmse_100", at(&nrmse, 100));
        out.push("nrmse_final", at(&nrmse, steps));
        out.push("ew_final", at(&ew, steps));
        out.push("c_vpt", vpt(&nrmse, o.vpt_epsilon) as f64);
        out.push("q_vpt", vpt(&ew, o.vpt_epsilon) as f64);
        let (lo, hi) = run
            .predictions
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        out.push("gen_min", lo);
        out.push("gen_max", hi);

        if o.perturb_step < steps {
            let p = Perturbation {
                step: o.perturb_step,
                amount: o.perturb_amount,
            };
            let shifted =
                closed_loop_generate(&mut perturbed, &next, None, &beta_source, u0, steps, Some(p)).map(|r| r.predictions);
            match shifted {
                Ok(pred) => {
                    let last_off = (o.perturb_step..steps)
                        .rev()
                        .find(|&t| (pred[t] - run.predictions[t]).abs() > RECOVERY_TOL);
                    let recovery = last_off.map_or(0, |t| t + 1 - o.perturb_step);
                    out.push("recovery_steps", recovery as f64);
                    out.push("recovered", f64::from(u8::from(last_off.map_or(true, |t| t + 1 < steps))));
                }
                Err(e) => {
                    log::warn!("perturbed closed loop diverged: {e}");
                    out.push("recovery_steps", (steps - o.perturb_step) as f64);
                    out.push("recovered", 0.0);
                }
            }
        }
        let mut diag = reservoir.diagnostics().clone();
        diag.merge(perturbed.diagnostics());
        out.push_diagnostics(&diag);
        out.extras = Some(json!({
            "truth": truth_next,
            "predictions": run.predictions,
            "nrmse": nrmse,
            "ew": ew,
        }));
        push_grids(&mut out, &wt, &wp, 0, o.grid_samples);
        Ok(out)
    }

    fn depolarizing_prep(&self) -> Result<CellOutcome> {
        let o = &self.options;
        let l = self.lengths;
        let inputs = self.quantum_inputs(|dim| InputStates::Mixed { dim })?;
        let offset = o.d_c.max(o.d_q);
        let data = depolarizing_task_sequence(
            offset + l.washout + l.train + l.eval,
            self.data_seed(),
            inputs,
            o.d_c,
            o.d_q,
        )?;
        let cfg = self.reservoir.sample(self.seed)?;
        let readout = ReadoutSpec {
            mode_set: o.mode_set,
            outputs: 1,
            out_cutoff: o.out_cutoff.unwrap_or(inputs.dim()),
        };
        let spec = TrainSpec {
            trainable: o.trainable,
            cost: o.cost,
            max_iters: o.max_iters,
            joint_iters: o.joint_iters,
            inner_iters: o.inner_iters,
            washout: l.washout,
            train: l.train,
            eval: l.eval,
            ..Default::default()
        };
        let r = train_quantum_readout(&cfg, &data, &readout, &spec)?;
        let mut out = CellOutcome::default();
        out.push("train_error", r.train_error);
        out.push("eval_error", r.eval_error);
        out.push("baseline_train", r.baseline_train);
        out.push("baseline_eval", r.baseline_eval);
        out.push("mean_lost", r.mean_lost);
        out.push("evaluations", r.evaluations as f64);
        out.push_diagnostics(&r.diagnostics);
        out.extras = Some(json!({
            "trace": r.trace,
            "w_in": r.w_in,
            "mixer": r.mixer,
        }));
        Ok(out)
    }

    fn memory_capacity(&self) -> Result<CellOutcome> {
        let o = &self.options;
        let l = self.lengths;
        let n = l.washout + l.train + l.eval;
        let inputs = self.quantum_inputs(|dim| InputStates::Pure { dim })?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.data_seed());
        let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let beta = inputs.sample_many(n, crate::run::mix_seed(self.seed, 0xBE7A, 3))?;
        let cfg = self.reservoir.sample(self.seed)?;
        let mut reservoir = Reservoir::new(&cfg)?;
        reservoir.warmup()?;
        let mut rows = Vec::with_capacity(n);
        let mut traces = vec![Vec::with_capacity(n - l.washout); cfg.n_sites];
        for (t, (&ut, b)) in self.affine(&u).iter().zip(&beta).enumerate() {
            rows.push(reservoir.step(ut, Some(b))?);
            if t >= l.washout {
                for (trace, occ) in traces.iter_mut().zip(reservoir.occupations()) {
                    trace.push(occ);
                }
            }
        }
        let x = FeatureMatrix::from_rows(&rows[l.washout..])?;
        let mc = memory_capacity_classical(&x, &u[l.washout..], o.d_max)?;
        let qmc = quantum_memory_capacity(&x, &beta[l.washout..], o.d_max)?;
        let ac = autocorrelation_timescale(&traces, self.reservoir.tau)?;
        let mut out = CellOutcome::default();
        out.push("mc", mc.capacity);
        out.push("qmc", qmc.capacity);
        out.push("autocorr_time", ac.crossing);
        out.push("autocorr_crossed", f64::from(u8::from(ac.crossed)));
        out.push_diagnostics(reservoir.diagnostics());
        out.extras = Some(json!({
            "mc_profile": mc.values,
            "qmc_profile": qmc.values,
            "autocovariance": ac.curve,
        }));
        Ok(out)
    }
}

fn vectorized(states: &[DensityMatrix]) -> DMatrix<f64> {
    let d = states[0].dim();
    let mut y = DMatrix::zeros(states.len(), 2 * d * d);
    for (i, s) in states.iter().enumerate() {
        for (j, v) in vectorize_density(s.matrix()).into_iter().enumerate() {
            y[(i, j)] = v;
        }
    }
    y
}

/// Ridge fit on the `train` rows, predictions for the `eval` rows.
fn fit_predict(x: &FeatureMatrix, y: &DMatrix<f64>, train: &Range<usize>, eval: &Range<usize>) -> Result<DMatrix<f64>> {
    ensure!(eval.end <= x.nrows() && eval.end <= y.nrows(), "evaluation window past the data");
    let xt = x.rows(train.start, train.len());
    let yt = y.rows(train.start, train.len()).into_owned();
    let w = ridge_fit(&xt, &yt, default_eta(&xt)).context("ridge fit")?;
    Ok(w.predict(&x.rows(eval.start, eval.len()))?)
}

fn reconstruct_all(pred: &DMatrix<f64>, space: &HilbertSpace) -> Result<Vec<DensityMatrix>> {
    (0..pred.nrows())
        .map(|i| {
            let row: Vec<f64> = pred.row(i).iter().copied().collect();
            Ok(reconstruct_density(&row, space)?)
        })
        .collect()
}

fn wigner_all(kernel: &WignerKernel, states: &[DensityMatrix]) -> Result<Vec<WignerGrid>> {
    Ok(states.iter().map(|s| kernel.evaluate(s)).collect::<hqrc::Result<Vec<_>>>()?)
}

fn values(grids: &[WignerGrid]) -> Vec<DMatrix<f64>> {
    grids.iter().map(|g| g.values.clone()).collect()
}

fn push_grids(out: &mut CellOutcome, wt: &[WignerGrid], wp: &[WignerGrid], first: usize, count: usize) {
    for (t, (a, b)) in wt.iter().zip(wp).take(count).enumerate() {
        out.grids.push((format!("step{:04}_target", first + t), a.clone()));
        out.grids.push((format!("step{:04}_predicted", first + t), b.clone()));
    }
}
