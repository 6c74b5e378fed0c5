//! Experiment specification: a TOML document with a task name, optional
//! reservoir overrides, a sweep grid and task options.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use hqrc::dynamics::ReservoirParams;
use hqrc::quantum_readout::{CostKind, ModeSet, Trainable};
use hqrc::tasks::{Encoding, InputStates, SwitchTarget};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid spec:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    SwitchEqualizer,
    CvClosedLoop,
    CvNontemporal,
    DepolarizingPrep,
    MemoryCapacity,
    EsnBaseline,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::SwitchEqualizer,
        TaskKind::CvClosedLoop,
        TaskKind::CvNontemporal,
        TaskKind::DepolarizingPrep,
        TaskKind::MemoryCapacity,
        TaskKind::EsnBaseline,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::SwitchEqualizer => "switch-equalizer",
            TaskKind::CvClosedLoop => "cv-closed-loop",
            TaskKind::CvNontemporal => "cv-nontemporal",
            TaskKind::DepolarizingPrep => "depolarizing-prep",
            TaskKind::MemoryCapacity => "memory-capacity",
            TaskKind::EsnBaseline => "esn-baseline",
        }
    }

    pub fn summary(&self) -> &'static str {
        match self {
            TaskKind::SwitchEqualizer => "switch tomography and channel equalization (rmsf, ser)",
            TaskKind::CvClosedLoop => "squeezed-state tomography with closed-loop control (nrmse, vpt, recovery)",
            TaskKind::CvNontemporal => "squeezed-state tomography without temporal context (rmsf, ew)",
            TaskKind::DepolarizingPrep => "quantum readout preparing depolarized states (ef or ew, baseline)",
            TaskKind::MemoryCapacity => "classical and quantum memory capacity, autocorrelation time (mc, qmc)",
            TaskKind::EsnBaseline => "echo state network on the equalizer (ser)",
        }
    }

    /// Reservoir defaults for the task.
    pub fn default_reservoir(&self) -> ReservoirParams {
        let base = ReservoirParams::default();
        match self {
            TaskKind::SwitchEqualizer | TaskKind::EsnBaseline => ReservoirParams {
                n_sites: 3,
                multiplex: 8,
                drive: 0.1,
                input_scale: 1.0,
                ..base
            },
            TaskKind::CvClosedLoop => ReservoirParams {
                n_sites: 3,
                multiplex: 10,
                drive: 1.0,
                input_scale: 0.8,
                input_cutoffs: vec![9],
                ..base
            },
            TaskKind::CvNontemporal => ReservoirParams {
                n_sites: 3,
                multiplex: 8,
                drive: 1.0,
                input_scale: 1.0,
                input_cutoffs: vec![9],
                ..base
            },
            TaskKind::DepolarizingPrep => ReservoirParams {
                n_sites: 2,
                site_cutoff: 4,
                nonlinearity: 1.0,
                multiplex: 1,
                drive: 1.0,
                input_scale: 2.0,
                ..base
            },
            TaskKind::MemoryCapacity => ReservoirParams {
                n_sites: 2,
                multiplex: 8,
                drive: 4.0,
                input_scale: 1.0,
                ..base
            },
        }
    }

    pub fn default_lengths(&self) -> Lengths {
        match self {
            TaskKind::DepolarizingPrep => Lengths {
                washout: 10,
                train: 200,
                eval: 100,
            },
            TaskKind::MemoryCapacity => Lengths {
                washout: 20,
                train: 400,
                eval: 100,
            },
            TaskKind::CvClosedLoop => Lengths {
                washout: 20,
                train: 400,
                eval: 200,
            },
            _ => Lengths {
                washout: 10,
                train: 800,
                eval: 200,
            },
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Step counts. For `cv-closed-loop`, `eval` is the number of closed-loop steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lengths {
    pub washout: usize,
    pub train: usize,
    pub eval: usize,
}

/// Optional overrides of the task's reservoir defaults, in units of `gamma`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirOverrides {
    pub n_sites: Option<usize>,
    pub site_cutoff: Option<usize>,
    pub input_cutoffs: Option<Vec<usize>>,
    pub onsite: Option<f64>,
    pub nonlinearity: Option<f64>,
    pub drive: Option<f64>,
    pub input_scale: Option<f64>,
    pub gamma: Option<f64>,
    pub hopping_max: Option<f64>,
    pub w_in_max: Option<f64>,
    pub tau: Option<f64>,
    pub t_init: Option<f64>,
    pub multiplex: Option<usize>,
    pub dt: Option<f64>,
}

impl ReservoirOverrides {
    pub fn apply(&self, mut p: ReservoirParams) -> ReservoirParams {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f.clone() { p.$f = v; })*};
        }
        set!(
            n_sites,
            site_cutoff,
            input_cutoffs,
            onsite,
            nonlinearity,
            drive,
            input_scale,
            gamma,
            hopping_max,
            w_in_max,
            tau,
            t_init,
            multiplex,
            dt
        );
        p
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffPolicy {
    /// Record the top-level population only.
    #[default]
    Warn,
    /// Re-run the cell with a larger site cutoff (at most twice).
    Raise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskOptions {
    pub q_a: f64,
    pub q_b: f64,
    /// Target delay `d`.
    pub delay: usize,
    pub snr_db: f64,
    pub switch_target: SwitchTarget,
    /// `u -> a u + b` before the input enters the drive.
    pub input_affine: Option<[f64; 2]>,
    pub encoding: Encoding,
    /// Quantum input distribution; the task default when absent.
    pub inputs: Option<InputStates>,
    pub f: f64,
    pub perturb_step: usize,
    pub perturb_amount: f64,
    /// Threshold of both valid prediction times.
    pub vpt_epsilon: f64,
    pub d_c: usize,
    pub d_q: usize,
    pub mode_set: ModeSet,
    /// Candidate readout modes; sets the site count when given.
    pub n_r: Option<usize>,
    pub trainable: Trainable,
    pub cost: CostKind,
    pub out_cutoff: Option<usize>,
    pub max_iters: usize,
    pub joint_iters: usize,
    pub inner_iters: usize,
    pub d_max: usize,
    pub esn_nodes: usize,
    pub esn_connection_probability: f64,
    pub esn_spectral_radius: f64,
    pub esn_input_scale: f64,
    /// Evaluation steps whose Wigner grids are written per cell.
    pub grid_samples: usize,
    pub cutoff_policy: CutoffPolicy,
}

impl Default for TaskOptions {
    fn default() -> Self {
        Self {
            q_a: 0.5,
            q_b: 0.5,
            delay: 1,
            snr_db: 24.0,
            switch_target: SwitchTarget::Joint,
            input_affine: None,
            encoding: Encoding::Amp,
            inputs: None,
            f: 60.0,
            perturb_step: 50,
            perturb_amount: 0.05,
            vpt_epsilon: 0.1,
            d_c: 0,
            d_q: 0,
            mode_set: ModeSet::All,
            n_r: None,
            trainable: Trainable::Wio,
            cost: CostKind::Ef,
            out_cutoff: None,
            max_iters: 1500,
            joint_iters: 20,
            inner_iters: 400,
            d_max: 40,
            esn_nodes: 24,
            esn_connection_probability: 0.1,
            esn_spectral_radius: 0.9,
            esn_input_scale: 1.0,
            grid_samples: 0,
            cutoff_policy: CutoffPolicy::Warn,
        }
    }
}

/// Sweep axes and the parameter each one sets.
pub const SWEEP_KEYS: [(&str, &str); 12] = [
    ("w", "classical input scale W/γ"),
    ("p", "drive P/γ"),
    ("n", "reservoir sites N"),
    ("v", "multiplexity V"),
    ("d", "target delay d"),
    ("f", "control frequency f"),
    ("nodes", "ESN nodes"),
    ("n_r", "candidate readout modes N_R"),
    ("q", "both switch depolarizing strengths"),
    ("snr_db", "equalizer SNR in dB"),
    ("d_c", "classical delay of the depolarizing target"),
    ("d_q", "quantum delay of the depolarizing target"),
];

const INTEGER_KEYS: [&str; 7] = ["n", "v", "d", "nodes", "n_r", "d_c", "d_q"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub task: TaskKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Lengths>,
    #[serde(default)]
    pub reservoir: ReservoirOverrides,
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub options: TaskOptions,
}

fn default_trials() -> usize {
    10
}

impl ExperimentSpec {
    pub fn new(task: TaskKind) -> Self {
        Self {
            task,
            trials: default_trials(),
            seed: 0,
            output_dir: None,
            lengths: None,
            reservoir: ReservoirOverrides::default(),
            sweep: BTreeMap::new(),
            options: TaskOptions::default(),
        }
    }

    pub fn lengths(&self) -> Lengths {
        self.lengths.unwrap_or_else(|| self.task.default_lengths())
    }

    pub fn reservoir(&self) -> ReservoirParams {
        self.reservoir.apply(self.task.default_reservoir())
    }

    /// Cartesian product of the sweep axes in key order, last key fastest.
    /// A spec without axes has one empty point.
    pub fn points(&self) -> Vec<BTreeMap<String, f64>> {
        let mut points = vec![BTreeMap::new()];
        for (key, values) in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.insert(key.clone(), v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let mut errs = Vec::new();
        if self.trials == 0 {
            errs.push("trials must be positive".to_string());
        }
        let l = self.lengths();
        if l.train == 0 || l.eval == 0 {
            errs.push("lengths.train and lengths.eval must be positive".to_string());
        }
        for (key, values) in &self.sweep {
            if !SWEEP_KEYS.iter().any(|(k, _)| k == key) {
                errs.push(format!("unknown sweep axis `{key}`"));
            }
            if values.is_empty() {
                errs.push(format!("sweep axis `{key}` is empty"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                errs.push(format!("sweep axis `{key}` has non-finite values"));
            }
            if INTEGER_KEYS.contains(&key.as_str()) && values.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
                errs.push(format!("sweep axis `{key}` needs non-negative integers"));
            }
        }
        let r = self.reservoir();
        if r.multiplex == 0 || self.sweep.get("v").is_some_and(|v| v.contains(&0.0)) {
            errs.push("multiplexity V must be positive".to_string());
        }
        if r.n_sites == 0 || self.sweep.get("n").is_some_and(|v| v.contains(&0.0)) {
            errs.push("n_sites must be positive".to_string());
        }
        if r.site_cutoff < 2 || r.input_cutoffs.iter().any(|&d| d < 2) {
            errs.push("Fock cutoffs must be at least 2".to_string());
        }
        for (name, v) in [("gamma", r.gamma), ("tau", r.tau), ("dt", r.dt)] {
            if !(v > 0.0) {
                errs.push(format!("reservoir.{name} must be positive"));
            }
        }
        if r.t_init < 0.0 {
            errs.push("reservoir.t_init must be non-negative".to_string());
        }
        let o = &self.options;
        for (name, q) in [("q_a", o.q_a), ("q_b", o.q_b)] {
            if !(0.0..=1.0).contains(&q) {
                errs.push(format!("options.{name} must lie in [0, 1]"));
            }
        }
        if !(o.vpt_epsilon > 0.0) {
            errs.push("options.vpt_epsilon must be positive".to_string());
        }
        if self.task == TaskKind::EsnBaseline && o.esn_nodes == 0 {
            errs.push("options.esn_nodes must be positive".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SpecError::Invalid(errs))
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, SpecError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentSpec::from_toml(&text).map_err(|e| match e {
        SpecError::Parse(msg) => SpecError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}
