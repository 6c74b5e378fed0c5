//! Result files: long-form CSV, JSON with metadata and Wigner grid text files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::run::{GridRecord, ResultTable};

pub const CSV_NAME: &str = "results.csv";
pub const SUMMARY_NAME: &str = "summary.csv";
pub const JSON_NAME: &str = "results.json";

fn param_label(names: &[String], params: &std::collections::BTreeMap<String, f64>) -> String {
    names
        .iter()
        .map(|n| format!("{n}{}", params[n]))
        .collect::<Vec<_>>()
        .join("_")
}

/// Writes the result files into `dir` and returns their paths.
pub fn emit_outputs(table: &ResultTable, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let path = dir.join(CSV_NAME);
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["task".to_string()];
    header.extend(table.param_names.iter().cloned());
    header.extend(["trial", "metric", "value"].map(String::from));
    w.write_record(&header)?;
    for r in &table.rows {
        let mut rec = vec![table.task.to_string()];
        rec.extend(table.param_names.iter().map(|n| r.params[n].to_string()));
        rec.extend([r.trial.to_string(), r.metric.clone(), r.value.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join(SUMMARY_NAME);
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["task".to_string()];
    header.extend(table.param_names.iter().cloned());
    header.extend(["metric", "count", "mean", "std"].map(String::from));
    w.write_record(&header)?;
    for s in &table.summary {
        let mut rec = vec![table.task.to_string()];
        rec.extend(table.param_names.iter().map(|n| s.params[n].to_string()));
        rec.extend([s.metric.clone(), s.count.to_string(), s.mean.to_string(), s.std.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join(JSON_NAME);
    let json = serde_json::to_string_pretty(table).map_err(io::Error::other)?;
    fs::write(&path, json)?;
    written.push(path);

    if !table.grids.is_empty() {
        let gdir = dir.join("grids");
        fs::create_dir_all(&gdir)?;
        for g in &table.grids {
            let mut name = param_label(&table.param_names, &g.params);
            if !name.is_empty() {
                name.push('_');
            }
            let path = gdir.join(format!("{name}trial{}_{}.txt", g.trial, g.name));
            write_grid(g, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// One line per x value, p values across; `R` rows of `R` reals.
pub fn write_grid(g: &GridRecord, path: &Path) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    let n = g.grid.p_points.len();
    for row in g.grid.to_row_major().chunks(n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(f, "{}", line.join(" "))?;
    }
    f.flush()
}

/// Parses a grid file written by [`write_grid`] into row-major values.
pub fn read_grid(path: &Path) -> io::Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
        .collect()
}

pub fn load_table(path: &Path) -> io::Result<ResultTable> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
