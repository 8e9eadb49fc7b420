use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Unreadable, malformed or inconsistent input, or an unwritable output.
    #[error("{context}: {message}")]
    Data { context: String, message: String },
    #[error("analysis failed: {0}")]
    Analysis(String),
}

impl PipelineError {
    pub fn data(context: impl Into<String>, message: impl ToString) -> Self {
        PipelineError::Data {
            context: context.into(),
            message: message.to_string(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Data { .. } => 2,
            PipelineError::Analysis(_) => 3,
        }
    }
}
