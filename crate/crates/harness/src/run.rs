//! Sweep execution and result aggregation.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use hqrc::operator::WignerGrid;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::cells::{Cell, CellOutcome};
use crate::spec::{ExperimentSpec, TaskKind};

/// splitmix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one cell from the base seed, sweep point index and trial index.
pub fn mix_seed(base: u64, point: u64, trial: u64) -> u64 {
    splitmix(splitmix(splitmix(base) ^ point) ^ trial.rotate_left(32))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub params: BTreeMap<String, f64>,
    pub trial: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub params: BTreeMap<String, f64>,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub params: BTreeMap<String, f64>,
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellExtra {
    pub params: BTreeMap<String, f64>,
    pub trial: usize,
    pub data: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRecord {
    pub params: BTreeMap<String, f64>,
    pub trial: usize,
    pub name: String,
    pub grid: WignerGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub code_version: String,
    pub wall_time_s: f64,
    pub jobs: usize,
    pub spec: ExperimentSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub task: TaskKind,
    pub param_names: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<CellFailure>,
    pub extras: Vec<CellExtra>,
    #[serde(skip)]
    pub grids: Vec<GridRecord>,
    pub metadata: Metadata,
}

impl ResultTable {
    /// Values of one metric at one sweep point, in trial order.
    pub fn values(&self, params: &BTreeMap<String, f64>, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| &r.params == params && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }

    pub fn mean(&self, params: &BTreeMap<String, f64>, metric: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| &s.params == params && s.metric == metric)
            .map(|s| s.mean)
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn config_hash(spec: &ExperimentSpec) -> String {
    let digest = Sha256::digest(spec.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

/// Runs every (sweep point, trial) cell on `jobs` worker threads.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> ResultTable {
    let started = Instant::now();
    let points = spec.points();
    let cells: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let slots: Mutex<Vec<Option<(u64, Result<CellOutcome, String>)>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let jobs = jobs.clamp(1, cells.len().max(1));

    let work = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(&(p, t)) = cells.get(i) else { break };
        let seed = mix_seed(spec.seed, p as u64, t as u64);
        let clock = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| {
            Cell::resolve(spec, &points[p], seed).and_then(|c| c.run())
        }));
        let result = match result {
            Ok(Ok(out)) => Ok(out),
            Ok(Err(e)) => Err(format!("{e:#}")),
            Err(panic) => Err(format!("panicked: {}", panic_message(panic))),
        };
        match &result {
            Ok(_) => log::info!(
                "{} {:?} trial {t}: done in {:.1} s",
                spec.task,
                points[p],
                clock.elapsed().as_secs_f64()
            ),
            Err(e) => log::error!("{} {:?} trial {t}: {e}", spec.task, points[p]),
        }
        slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some((seed, result));
    };
    std::thread::scope(|s| {
        for _ in 1..jobs {
            s.spawn(work);
        }
        work();
    });

    let slots = slots.into_inner().unwrap_or_else(|e| e.into_inner());
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut extras = Vec::new();
    let mut grids = Vec::new();
    for (&(p, trial), slot) in cells.iter().zip(slots) {
        let params = &points[p];
        let (seed, result) = slot.expect("every cell runs");
        match result {
            Ok(out) => {
                for (metric, value) in out.metrics {
                    rows.push(ResultRow {
                        params: params.clone(),
                        trial,
                        metric,
                        value,
                    });
                }
                if let Some(data) = out.extras {
                    extras.push(CellExtra {
                        params: params.clone(),
                        trial,
                        data,
                    });
                }
                for (name, grid) in out.grids {
                    grids.push(GridRecord {
                        params: params.clone(),
                        trial,
                        name,
                        grid,
                    });
                }
            }
            Err(error) => failures.push(CellFailure {
                params: params.clone(),
                trial,
                seed,
                error,
            }),
        }
    }

    ResultTable {
        task: spec.task,
        param_names: spec.sweep.keys().cloned().collect(),
        summary: summarize(&points, &rows),
        rows,
        failures,
        extras,
        grids,
        metadata: Metadata {
            config_hash: config_hash(spec),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: started.elapsed().as_secs_f64(),
            jobs,
            spec: spec.clone(),
        },
    }
}

fn summarize(points: &[BTreeMap<String, f64>], rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for params in points {
        let mut metrics: Vec<&str> = Vec::new();
        for r in rows.iter().filter(|r| &r.params == params) {
            if !metrics.contains(&r.metric.as_str()) {
                metrics.push(&r.metric);
            }
        }
        for metric in metrics {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| &r.params == params && r.metric == metric)
                .map(|r| r.value)
                .collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let std = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            out.push(SummaryRow {
                params: params.clone(),
                metric: metric.to_string(),
                count: v.len(),
                mean,
                std,
            });
        }
    }
    out
}
