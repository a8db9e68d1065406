use sns_mdp::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("cross-check failed: {0}")]
    CrossCheck(String),
}

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 usage, 2 validation, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Json(_) => 1,
            CliError::CrossCheck(_) => 3,
            CliError::Core(e) => match e {
                CoreError::Singular { .. }
                | CoreError::NoConvergence { .. }
                | CoreError::Numerical(_) => 3,
                CoreError::Io(_) => 1,
                _ => 2,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
