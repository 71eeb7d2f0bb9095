use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("potential has no gradient table")]
    MissingGradient,

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("initial data has zero total amplitude")]
    ZeroAmplitude,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite solution at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}
