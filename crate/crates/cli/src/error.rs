use serde::Serialize;
use steering_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("unknown demo {0:?}")]
    UnknownDemo(String),

    #[error("certificate rejected: {0}")]
    Certificate(String),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "E_PARSE",
            CliError::Validation(_) => "E_VALIDATION",
            CliError::Io { .. } => "E_IO",
            CliError::UnknownDemo(_) => "E_UNKNOWN_DEMO",
            CliError::Certificate(_) => "E_CERTIFICATE",
            CliError::Usage(_) => "E_USAGE",
            CliError::Core(e) => match e {
                CoreError::Signalling { .. } => "E_SIGNALLING",
                CoreError::StrategyCapExceeded { .. } => "E_STRATEGY_CAP",
                CoreError::SolverNotConverged { .. } => "E_SOLVER",
                _ => "E_VALIDATION",
            },
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: ErrorBody {
                code: self.code(),
                message: self.to_string(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}
