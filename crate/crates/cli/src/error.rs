use std::io;

use restbuf_core::{ModelError, SimError};
use restbuf_testbed::TestbedError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or parameter values.
    #[error("{0}")]
    Usage(String),

    /// The run completed but a check failed.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Testbed(#[from] TestbedError),
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Model(m) => m.into(),
            SimError::InvalidConfig(_) | SimError::BadToken(_) | SimError::EmptyVector => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl CliError {
    /// Process exit status: 1 for usage and I/O problems, 2 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            _ => 1,
        }
    }
}
