use std::path::PathBuf;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Data violated a structural invariant (self-loop, asymmetry, shape mismatch, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// An input file could not be parsed.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A distribution was evaluated or sampled outside its support.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Relabelling kept no iteration that passed the permutation check.
    #[error("no iteration passed the permutation check ({0})")]
    NoValidIterations(String),

    /// Multi-chain reconciliation discarded every chain.
    #[error("all chains were discarded: {0}")]
    AllChainsDiscarded(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
