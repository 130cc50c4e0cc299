use std::fmt;

use thiserror::Error;

/// Location and reason of a failed expression parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based character column; `len + 1` points past the end of the input.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("index {index} out of range for dimension {dim}")]
    Index { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error(
        "Newton iteration diverged after {iterations} iterations (residual {residual:e}): {reason}"
    )]
    NewtonDiverged {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("reference ODE solver did not converge: {0}")]
    OdeNonConvergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures that signal an unusable timestep rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NewtonDiverged { .. }
                | Error::Singular(_)
                | Error::OdeNonConvergence(_)
                | Error::Domain(_)
        )
    }
}
