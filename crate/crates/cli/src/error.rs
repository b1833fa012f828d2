use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("missing input {}: {hint}", path.display())]
    Missing { path: PathBuf, hint: String },

    #[error("digest mismatch: {0}")]
    Digest(String),

    #[error(transparent)]
    Lapcom(#[from] lapcom::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for bad invocations or inputs, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Missing { .. } => 2,
            CliError::Lapcom(lapcom::Error::Validation(_) | lapcom::Error::Parse { .. }) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
