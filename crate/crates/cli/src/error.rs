use std::io;
use std::path::PathBuf;

use doslab::{Error as CoreError, ErrorKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    /// The command ran and wrote its outputs, but a check or cell failed.
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config { field: field.into(), message: message.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Invalid => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Precondition => 4,
            },
            CliError::Io { .. } => 1,
            CliError::CheckFailed(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
