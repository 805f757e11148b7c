use nap_core::NapError;

/// Failures that end a run, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The scenario or flags are malformed.
    #[error("invalid input: {0}")]
    Validation(String),
    /// At least one query errored or failed its assertion.
    #[error("{0}")]
    QueryFailed(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::QueryFailed(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

/// Errors raised while reading inputs are validation errors.
pub fn invalid(e: NapError) -> CliError {
    CliError::Validation(e.to_string())
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
