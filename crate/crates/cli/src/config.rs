//! Run configuration: flat `key = value` files overlaid with command-line
//! flags.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Every key must be known. Flags are applied after the file, so
//! they win. Validation runs once, on the merged result.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qsp::mountain_pass::{DEFAULT_PATH_NODES, DEFAULT_TOL};
use qsp::nonlinearity::ModelParams;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Default tolerance of the ε-sweep. The distances it measures are many
/// orders below the single-solve default.
pub const DEFAULT_SWEEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub params: ModelParams,
    /// `None` means the computed `T̄`.
    pub truncation: Option<f64>,
    pub tol: f64,
    pub sweep_tol: f64,
    pub path_nodes: usize,
    pub eps_start: f64,
    pub eps_factor: f64,
    pub eps_count: usize,
    pub seed: u64,
    pub plots: bool,
    pub dumps: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 63,
            params: ModelParams::default(),
            truncation: None,
            tol: DEFAULT_TOL,
            sweep_tol: DEFAULT_SWEEP_TOL,
            path_nodes: DEFAULT_PATH_NODES,
            eps_start: 0.5,
            eps_factor: 0.5,
            eps_count: 8,
            seed: 0,
            plots: true,
            dumps: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "n",
    "eps",
    "alpha0",
    "theta",
    "r",
    "tau",
    "T",
    "tol",
    "sweep_tol",
    "path_nodes",
    "eps_start",
    "eps_factor",
    "eps_count",
    "seed",
    "plots",
    "dumps",
    "out_dir",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("`{key}`: expected true/false, got `{value}`"))),
    }
}

impl RunConfig {
    /// Sets one key from its text value. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let p = &mut self.params;
        match key {
            "n" => self.n = num(key, value)?,
            "eps" => p.eps = num(key, value)?,
            "alpha0" => p.alpha0 = num(key, value)?,
            "theta" => p.theta = num(key, value)?,
            "r" => p.r = num(key, value)?,
            "tau" => p.tau = num(key, value)?,
            "T" => {
                self.truncation = if value == "auto" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "tol" => self.tol = num(key, value)?,
            "sweep_tol" => self.sweep_tol = num(key, value)?,
            "path_nodes" => self.path_nodes = num(key, value)?,
            "eps_start" => self.eps_start = num(key, value)?,
            "eps_factor" => self.eps_factor = num(key, value)?,
            "eps_count" => self.eps_count = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "plots" => self.plots = flag(key, value)?,
            "dumps" => self.dumps = flag(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Range checks for every field.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.n < 3 {
            return bad(format!("n = {} (need at least 3)", self.n));
        }
        self.params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(t) = self.truncation {
            if !(t > 0.0) || !t.is_finite() {
                return bad(format!("T = {t} (must be finite and > 0)"));
            }
        }
        for (name, v) in [("tol", self.tol), ("sweep_tol", self.sweep_tol)] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} = {v} (must be finite and > 0)"));
            }
        }
        if self.path_nodes < 3 {
            return bad(format!("path_nodes = {} (need at least 3)", self.path_nodes));
        }
        if !(self.eps_start > 0.0) || !self.eps_start.is_finite() {
            return bad(format!("eps_start = {} (must be > 0)", self.eps_start));
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return bad(format!("eps_factor = {} (must lie in (0, 1))", self.eps_factor));
        }
        if self.eps_count == 0 {
            return bad("eps_count = 0 (need at least one value)".into());
        }
        Ok(())
    }

    /// Canonical `key = value` lines, in [`KEYS`] order.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "n" => self.n.to_string(),
                    "eps" => format!("{:?}", p.eps),
                    "alpha0" => format!("{:?}", p.alpha0),
                    "theta" => format!("{:?}", p.theta),
                    "r" => format!("{:?}", p.r),
                    "tau" => format!("{:?}", p.tau),
                    "T" => self
                        .truncation
                        .map_or_else(|| "auto".to_string(), |t| format!("{t:?}")),
                    "tol" => format!("{:?}", self.tol),
                    "sweep_tol" => format!("{:?}", self.sweep_tol),
                    "path_nodes" => self.path_nodes.to_string(),
                    "eps_start" => format!("{:?}", self.eps_start),
                    "eps_factor" => format!("{:?}", self.eps_factor),
                    "eps_count" => self.eps_count.to_string(),
                    "seed" => self.seed.to_string(),
                    "plots" => self.plots.to_string(),
                    "dumps" => self.dumps.to_string(),
                    "out_dir" => self.out_dir.display().to_string(),
                    _ => unreachable!("key list and echo out of sync"),
                };
                (k, v)
            })
            .collect()
    }

    pub fn echo_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.echo() {
            writeln!(s, "{k} = {v}").expect("writing to String");
        }
        s
    }

    /// First 8 hex digits of the SHA-256 of the echo, without `out_dir`,
    /// so identical runs in different directories share a name.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.echo() {
            if k != "out_dir" {
                h.update(format!("{k} = {v}\n"));
            }
        }
        h.finalize()[..4].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Defaults, then `file`, then `overrides`, then validation.
pub fn parse_config(file: Option<&Path>, overrides: &[(&str, String)]) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
