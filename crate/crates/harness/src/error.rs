use std::path::PathBuf;

use poisson_integrators::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read config {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("step {index} failed: {source}")]
    Step {
        index: usize,
        #[source]
        source: CoreError,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("fixture '{name}' mismatch: {detail}")]
    FixtureMismatch { name: String, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

impl HarnessError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 4 for fixture mismatches, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::ConfigFile { .. } => 2,
            HarnessError::Step { .. } => 3,
            HarnessError::Core(e) if e.is_numerical() => 3,
            HarnessError::Core(_) => 2,
            HarnessError::FixtureMismatch { .. } => 4,
            HarnessError::Io { .. } => 1,
        }
    }
}
