//! File naming and writers for run artifacts.
//!
//! Every artifact of a run shares the stem `<subcommand>-n<n>-eps<ε>-<hash>`
//! inside the output directory. Field dumps and CSV tables keep their fixed
//! formats; the configuration echo goes into the run's `summary.jsonl` and,
//! as a comment, into every SVG.

use std::fs;
use std::path::{Path, PathBuf};

use qsp::grid::{write_field, Field};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::CliError;

pub fn stem(subcommand: &str, cfg: &RunConfig, eps: f64) -> String {
    format!("{subcommand}-n{}-eps{eps:?}-{}", cfg.n, cfg.hash())
}

pub fn artifact(cfg: &RunConfig, stem: &str, suffix: &str) -> PathBuf {
    cfg.out_dir.join(format!("{stem}.{suffix}"))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_field_file(path: &Path, u: &Field) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_field(&mut buf, u)?;
    write_text(path, std::str::from_utf8(&buf).expect("field dump is ASCII"))
}

pub fn read_field_file(path: &Path) -> Result<Field, CliError> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    qsp::grid::read_field(f).map_err(|e| io_err(path, e))
}

/// `{"config": {key: value, ...}}` with the echoed text values.
pub fn config_line(cfg: &RunConfig) -> Value {
    let mut m = Map::new();
    for (k, v) in cfg.echo() {
        m.insert(k.to_string(), Value::String(v));
    }
    json!({ "config": m })
}

/// One JSON document per line.
pub fn jsonl(lines: &[Value]) -> String {
    let mut s = String::new();
    for v in lines {
        s.push_str(&serde_json::to_string(v).expect("JSON values serialize"));
        s.push('\n');
    }
    s
}

/// Shortest round-trip text of a float, the form used in every CSV.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| io_err(path, e))?;
    write_text(path, std::str::from_utf8(&bytes).expect("CSV is UTF-8"))
}
