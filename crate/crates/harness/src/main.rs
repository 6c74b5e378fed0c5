use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hqrc_harness::{emit_outputs, load_spec, run_experiment, TaskKind, OUT_DIR_ENV, SWEEP_KEYS};

#[derive(Parser)]
#[command(name = "hqrc", version, about = "Quantum reservoir experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep cell of a spec and write the result files.
    Run {
        spec: PathBuf,
        /// Output directory (overrides HQRC_OUT_DIR and the spec).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Base seed (overrides the spec).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a spec.
    Validate { spec: PathBuf },
    /// List the available tasks and sweep axes.
    ListTasks,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::ListTasks => {
            for t in TaskKind::ALL {
                println!("{:<18} {}", t.name(), t.summary());
            }
            println!("\nsweep axes:");
            for (k, d) in SWEEP_KEYS {
                println!("  {k:<7} {d}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { spec } => match load_spec(&spec) {
            Ok(s) => {
                println!(
                    "{}: ok ({} sweep points x {} trials)",
                    spec.display(),
                    s.points().len(),
                    s.trials
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run { spec, out, jobs, seed } => {
            let mut s = match load_spec(&spec) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let dir = out
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .or_else(|| s.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results").join(s.task.name()));
            let table = run_experiment(&s, jobs);
            match emit_outputs(&table, &dir) {
                Ok(files) => log::info!("wrote {} files to {}", files.len(), dir.display()),
                Err(e) => {
                    eprintln!("error: cannot write {}: {e}", dir.display());
                    return ExitCode::from(1);
                }
            }
            for s in &table.summary {
                println!("{:?} {:<20} {:>12.6} ± {:.6} (n = {})", s.params, s.metric, s.mean, s.std, s.count);
            }
            if table.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &table.failures {
                    eprintln!("failed: {:?} trial {}: {}", f.params, f.trial, f.error);
                }
                ExitCode::from(2)
            }
        }
    }
}
