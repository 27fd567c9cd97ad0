use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
///
/// The variants are grouped by who is at fault so the CLI can map them onto
/// exit codes: bad inputs and data problems versus optimizer/solver failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent sizes or settings.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Input data could not be used.
    #[error("data error: {0}")]
    Data(String),

    #[error("{path}:{line}: {message}")]
    DataAt { path: PathBuf, line: u64, message: String },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("optimizer error: {0}")]
    Optimizer(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the optimizers or solvers rather than of their inputs.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Solver(_) | Error::Optimizer(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
