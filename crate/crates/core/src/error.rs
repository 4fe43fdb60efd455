use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = KhoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum KhoError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("initial state does not fit: {0}")]
    OutOfDomain(String),

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("field kind mismatch: expected {expected}, got {got}")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("grid spacing dp = {dp} does not divide eta^2 = {eta_sq}")]
    Incommensurate { dp: f64, eta_sq: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Bessel comb truncation order {0} exceeds limit")]
    TruncationOverflow(usize),

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no qualifying peak in series")]
    NoPeak,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("bad snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl KhoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KhoError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that come from the filesystem rather than from the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, KhoError::Io { .. } | KhoError::Snapshot { .. })
    }
}
