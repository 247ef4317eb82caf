use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag combinations; exit code 1.
    #[error("{0}")]
    Usage(String),

    /// Unreadable or invalid input data; exit code 2.
    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] anaphora_core::Error),

    #[error(transparent)]
    Service(#[from] anaphora_service::ServiceError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}
