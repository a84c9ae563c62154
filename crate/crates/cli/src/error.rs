use std::path::PathBuf;

use thiserror::Error;

/// Exit code for a malformed or unusable configuration.
pub const EXIT_CONFIG: i32 = 1;
/// Exit code for numerical or validation failures, and failed checks.
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Input data that parsed but failed validation (kernel files).
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] sr_mcmc::Error),

    /// One or more checks ran to completion and failed.
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use sr_mcmc::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Core(E::Argument(_) | E::Size(_)) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Data { .. } | CliError::CheckFailed(_) => EXIT_FAILURE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
