//! Machine-readable outputs: versioned JSON reports and plain CSV artifacts.
//!
//! Formatting is locale-independent by construction: floats go through
//! Rust's shortest-round-trip formatter, field order is fixed by the structs,
//! and CSV bodies carry one documented header row.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const SCHEMA: &str = "ell-lab-report/1";

/// Top-level report envelope.
#[derive(Serialize)]
pub struct Report<P: Serialize, R: Serialize> {
    pub schema: &'static str,
    pub command: &'static str,
    pub params: P,
    pub results: R,
    /// `true` when every verdict in the run passed.
    pub pass: bool,
}

/// Output directory: `ELL_LAB_OUT` overrides the `--out` flag.
pub fn out_dir(flag: Option<&Path>) -> PathBuf {
    if let Ok(env) = std::env::var("ELL_LAB_OUT") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    flag.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}

pub fn write_json<P: Serialize, R: Serialize>(
    dir: &Path,
    command: &'static str,
    params: P,
    results: R,
    pass: bool,
) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let report = Report { schema: SCHEMA, command, params, results, pass };
    let path = dir.join(format!("{command}.json"));
    let mut file = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut file, &report)?;
    file.write_all(b"\n")?;
    Ok(path)
}

/// Write a CSV with a single header row; rows are pre-rendered.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    file.flush()?;
    Ok(path)
}

/// Shortest-round-trip float rendering shared by all CSV writers.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}
