//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value (grid shape, probe set, sweep range, ...) is unusable.
    #[error("config error: {0}")]
    Config(String),

    /// A numeric procedure failed to converge. `partial` carries the best
    /// value computed before giving up, when one exists.
    #[error("numeric error: {msg}")]
    Numeric { msg: String, partial: Option<f64> },

    /// The operation is defined by the library only for a restricted input
    /// class and this input is outside it.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// No usable records could be ingested from an input stream.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// The LP solver stopped before reaching optimality. `best_incumbent`
    /// is the objective of the last feasible iterate, if any.
    #[error("solver error: {msg}")]
    Solver {
        msg: String,
        best_incumbent: Option<f64>,
    },

    /// Matrix/vector dimensions disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
