use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum QspError {
    #[error("domain mismatch: field on n={left} combined with field on n={right}")]
    DomainMismatch { left: usize, right: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("exponential overflow at node {node}: exponent {exponent:.6e} exceeds the f64 range")]
    Overflow { node: usize, exponent: f64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("line search failed in {what} (residual {residual:.3e})")]
    LineSearch { what: &'static str, residual: f64 },

    #[error("MP geometry not realized at this grid/params: {0}")]
    Geometry(String),

    #[error("path invariant violated: {0}")]
    PathInvariant(String),

    #[error("{0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QspError>;

/// Largest argument accepted by `exp` before the result overflows `f64`.
pub const EXP_ARG_MAX: f64 = 709.0;
