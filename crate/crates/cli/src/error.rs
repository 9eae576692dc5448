use std::io;

use dynk_core::report::ReportError;
use dynk_core::runs::{AlignmentError, ApdError};
use dynk_core::LoadError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Io(_) => 3,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::Usage(message.into())
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        if e.is_data_error() {
            Self::Data(e.to_string())
        } else {
            Self::Io(e.to_string())
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        if e.is_usage_error() {
            Self::Usage(e.to_string())
        } else if e.is_io_error() {
            Self::Io(e.to_string())
        } else {
            Self::Data(e.to_string())
        }
    }
}

impl From<dynk_core::AgreementError> for CliError {
    fn from(e: dynk_core::AgreementError) -> Self {
        ReportError::from(e).into()
    }
}

impl From<ApdError> for CliError {
    fn from(e: ApdError) -> Self {
        match e {
            ApdError::TooFewRuns(_) | ApdError::DuplicateRunId(_) => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<AlignmentError> for CliError {
    fn from(e: AlignmentError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
