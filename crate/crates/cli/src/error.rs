use std::path::PathBuf;

use qee_core::QeeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Model(QeeError),

    #[error("{0}")]
    Guard(QeeError),

    #[error("{failed} of {total} verification suites failed")]
    VerificationFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 verification failure, 2 config or IO error, 3 resource guard.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::VerificationFailed { .. } => 1,
            Self::Config(_) | Self::Io { .. } | Self::Model(_) => 2,
            Self::Guard(_) => 3,
        }
    }
}

impl From<QeeError> for CliError {
    fn from(e: QeeError) -> Self {
        match e {
            QeeError::DimensionGuard { .. } => Self::Guard(e),
            other => Self::Model(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
