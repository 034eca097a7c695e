//! Application-level errors, categorized by who is at fault: the invocation
//! (usage), the referenced files (data), or the computation itself.

use albias_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    /// Bad flags or an inconsistent request. Exit code 2.
    #[error("usage: {0}")]
    Usage(String),
    /// Missing, malformed, or contradictory input files. Exit code 3.
    #[error("data: {0}")]
    Data(String),
    /// A model or diagnostic computation failed. Exit code 4.
    #[error("compute: {0}")]
    Compute(#[from] CoreError),
}

impl AppError {
    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        AppError::Data(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Data(_) => 3,
            AppError::Compute(_) => 4,
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Data(e.to_string())
    }
}
