//! Declarative experiment runner for hybrid quantum reservoir processing.
//!
//! An [`ExperimentSpec`] names a task, reservoir overrides and a sweep grid.
//! [`run_experiment`] evaluates every (sweep point, trial) cell with a
//! derived seed and aggregates the metrics into a [`ResultTable`], which
//! [`emit_outputs`] writes as CSV, JSON and Wigner grid files.

pub mod cells;
pub mod output;
pub mod run;
pub mod spec;

pub use cells::{Cell, CellOutcome};
pub use output::{emit_outputs, load_table, read_grid, write_grid};
pub use run::{config_hash, mix_seed, run_experiment, CellFailure, GridRecord, ResultRow, ResultTable, SummaryRow};
pub use spec::{load_spec, ExperimentSpec, Lengths, SpecError, TaskKind, TaskOptions, SWEEP_KEYS};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "HQRC_OUT_DIR";
