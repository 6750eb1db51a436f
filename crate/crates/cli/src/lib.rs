//! Command-line driver for the `qsp` solver: configuration, subcommands and
//! output files.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver non-convergence
//! (or failed verification), 4 I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use qsp::error::QspError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<QspError> for CliError {
    fn from(e: QspError) -> Self {
        match e {
            QspError::InvalidParameter { .. } | QspError::Config(_) => CliError::Config(e.to_string()),
            QspError::Io(_) | QspError::Parse(_) | QspError::InvalidField(_) | QspError::DomainMismatch { .. } => {
                CliError::Io(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
