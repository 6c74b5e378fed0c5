use std::collections::BTreeMap;
use std::process::Command;

use hqrc::operator::{wigner, DensityMatrix, GridSpec, HilbertSpace, WignerGrid};
use hqrc_harness::{
    emit_outputs, load_spec, load_table, read_grid, run_experiment, write_grid, ExperimentSpec, GridRecord, Lengths,
    SpecError, TaskKind,
};

fn small_memory_spec() -> ExperimentSpec {
    let mut s = ExperimentSpec::new(TaskKind::MemoryCapacity);
    s.trials = 2;
    s.seed = 11;
    s.lengths = Some(Lengths {
        washout: 5,
        train: 60,
        eval: 20,
    });
    s.reservoir.n_sites = Some(1);
    s.reservoir.multiplex = Some(2);
    s.options.d_max = 3;
    s.sweep.insert("p".into(), vec![0.5, 2.0]);
    s
}

#[test]
fn minimal_spec_is_fully_defaulted() {
    let s = ExperimentSpec::from_toml("task = \"switch-equalizer\"").unwrap();
    assert_eq!(s.trials, 10);
    assert_eq!(s.lengths().train, 800);
    assert_eq!(s.lengths().eval, 200);
    let r = s.reservoir();
    assert_eq!((r.n_sites, r.multiplex), (3, 8));
    assert_eq!((r.tau, r.t_init, r.onsite), (1.0, 5.0, 0.0));
    assert_eq!(s.points().len(), 1);
}

#[test]
fn invalid_specs_are_rejected() {
    let zero_v = "task = \"memory-capacity\"\n[reservoir]\nmultiplex = 0\n";
    assert!(matches!(ExperimentSpec::from_toml(zero_v), Err(SpecError::Invalid(_))));
    let swept = "task = \"memory-capacity\"\n[sweep]\nv = [0, 4]\n";
    assert!(matches!(ExperimentSpec::from_toml(swept), Err(SpecError::Invalid(_))));
    let unknown = "task = \"memory-capacity\"\ncolour = 3\n";
    assert!(matches!(ExperimentSpec::from_toml(unknown), Err(SpecError::Parse(_))));
    let empty = "task = \"memory-capacity\"\n[sweep]\nw = []\n";
    assert!(matches!(ExperimentSpec::from_toml(empty), Err(SpecError::Invalid(_))));
    let lengths = "task = \"memory-capacity\"\n[lengths]\nwashout = 1\ntrain = 0\neval = 4\n";
    assert!(matches!(ExperimentSpec::from_toml(lengths), Err(SpecError::Invalid(_))));
    let bad_task = "task = \"teleport\"\n";
    assert!(matches!(ExperimentSpec::from_toml(bad_task), Err(SpecError::Parse(_))));
}

#[test]
fn spec_round_trip() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("specs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let a = load_spec(&path).unwrap();
        let b = ExperimentSpec::from_toml(&a.to_toml()).unwrap();
        assert_eq!(a, b, "{}", path.display());
        n += 1;
    }
    assert!(n >= 5);
    let s = small_memory_spec();
    assert_eq!(ExperimentSpec::from_toml(&s.to_toml()).unwrap(), s);
}

#[test]
fn sweep_points_are_a_cartesian_product() {
    let mut s = ExperimentSpec::new(TaskKind::SwitchEqualizer);
    s.sweep.insert("w".into(), vec![0.1, 1.0, 4.0]);
    s.sweep.insert("d".into(), vec![1.0, 3.0]);
    let p = s.points();
    assert_eq!(p.len(), 6);
    // keys in order, last key fastest
    assert_eq!(p[0], BTreeMap::from([("d".to_string(), 1.0), ("w".to_string(), 0.1)]));
    assert_eq!(p[1], BTreeMap::from([("d".to_string(), 1.0), ("w".to_string(), 1.0)]));
}

#[test]
fn runs_are_deterministic_and_files_reload() {
    let s = small_memory_spec();
    let a = run_experiment(&s, 1);
    let b = run_experiment(&s, 2);
    assert!(a.failures.is_empty(), "{:?}", a.failures);
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.metadata.config_hash, b.metadata.config_hash);

    let metrics = a.rows.iter().filter(|r| r.trial == 0 && r.params == a.rows[0].params).count();
    assert!(a.rows.iter().any(|r| r.metric == "mc"));
    assert!(a.rows.iter().any(|r| r.metric == "qmc"));

    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&a, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "task,p,trial,metric,value");
    // cells x metrics
    assert_eq!(lines.count(), 2 * 2 * metrics);
    let back = load_table(&dir.path().join("results.json")).unwrap();
    assert_eq!(back.rows, a.rows);
    assert_eq!(back.summary, a.summary);
    assert_eq!(back.metadata, a.metadata);
}

#[test]
fn different_seeds_change_the_table() {
    let s = small_memory_spec();
    let mut t = s.clone();
    t.seed += 1;
    assert_ne!(run_experiment(&s, 1).rows, run_experiment(&t, 1).rows);
}

#[test]
fn failing_cells_are_isolated() {
    let mut s = small_memory_spec();
    // N_R = 1 has no site count with one input mode under ALL
    s.task = TaskKind::DepolarizingPrep;
    s.trials = 1;
    s.sweep.clear();
    s.sweep.insert("n_r".into(), vec![1.0, 2.0]);
    s.options.trainable = hqrc::quantum_readout::Trainable::Wo;
    s.options.max_iters = 20;
    s.lengths = Some(Lengths {
        washout: 2,
        train: 10,
        eval: 5,
    });
    let t = run_experiment(&s, 1);
    assert_eq!(t.failures.len(), 1);
    assert_eq!(t.failures[0].params["n_r"], 1.0);
    assert!(t.rows.iter().all(|r| r.params["n_r"] == 2.0));
    assert!(t.rows.iter().any(|r| r.metric == "eval_error"));
}

#[test]
fn vacuum_grid_file_peaks_at_one_over_pi() {
    let spec = GridSpec::default();
    let vac = DensityMatrix::vacuum(&HilbertSpace::single(4).unwrap());
    let record = GridRecord {
        params: BTreeMap::new(),
        trial: 0,
        name: "vacuum".into(),
        grid: wigner(&vac, &spec).unwrap(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vacuum.txt");
    write_grid(&record, &path).unwrap();
    let values = read_grid(&path).unwrap();
    assert_eq!(values.len(), 61 * 61);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 61);
    let center = values[30 * 61 + 30];
    assert!((center - std::f64::consts::FRAC_1_PI).abs() < 1e-6);
    assert!(values.iter().all(|&v| v <= center));
    let back = WignerGrid::from_row_major(&spec, &values).unwrap();
    assert_eq!(back.values, record.grid.values);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hqrc"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, small_memory_spec().to_toml()).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "task = \"memory-capacity\"\n[reservoir]\nmultiplex = 0\n").unwrap();

    assert!(bin().arg("list-tasks").output().unwrap().status.success());
    assert_eq!(bin().args(["validate"]).arg(&good).status().unwrap().code(), Some(0));
    assert_eq!(bin().args(["validate"]).arg(&bad).status().unwrap().code(), Some(1));
    assert_eq!(bin().args(["run"]).arg(&bad).status().unwrap().code(), Some(1));

    let out = dir.path().join("env_out");
    let status = bin()
        .args(["run", "--seed", "3"])
        .arg(&good)
        .env("HQRC_OUT_DIR", &out)
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let table = load_table(&out.join("results.json")).unwrap();
    assert_eq!(table.metadata.spec.seed, 3);

    let mut failing = small_memory_spec();
    failing.task = TaskKind::DepolarizingPrep;
    failing.trials = 1;
    failing.sweep.clear();
    failing.sweep.insert("n_r".into(), vec![1.0]);
    let partial = dir.path().join("partial.toml");
    std::fs::write(&partial, failing.to_toml()).unwrap();
    let code = bin()
        .args(["run", "--out"])
        .arg(dir.path().join("p"))
        .arg(&partial)
        .env("RUST_LOG", "off")
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(2));
}
