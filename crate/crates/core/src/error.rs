use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's preconditions (shape mismatch, non-finite input).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A scalar argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Poincaré point lies on or beyond the ideal boundary.
    #[error("point outside the open unit ball (norm {norm:.17e})")]
    OutOfBall { norm: f64 },

    /// A point does not lie on the upper sheet of the hyperboloid.
    #[error("point is off the hyperboloid: {0}")]
    OffSheet(String),

    /// The finite-sum normalizer is dominated by cancellation; use quadrature instead.
    #[error("precision loss in finite-sum normalizer (d={dim}, beta={beta}): largest term is {ratio:.3e} times the result")]
    PrecisionLoss { dim: usize, beta: f64, ratio: f64 },

    /// An internal algorithm failed in a way that indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),

    /// Malformed input file.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
