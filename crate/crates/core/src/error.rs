use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A NaN or infinity appeared in `context`.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("no convergence after {iterations} iterations (best estimate {best_estimate})")]
    Convergence { iterations: usize, best_estimate: f64 },

    #[error("line search failed to satisfy the sufficient-decrease test after {backtracks} backtracks")]
    LineSearch { backtracks: usize },

    #[error("step-size backtracking exceeded the ceiling {ceiling}")]
    StepCeiling { ceiling: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),

    #[error("malformed instance file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn ensure_finite(value: f64, context: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(context))
    }
}
