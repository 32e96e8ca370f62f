use std::path::Path;

use thiserror::Error;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    MissingData(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Failed(String),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const MISSING_DATA: i32 = 4;
    pub const NOT_CONVERGED: i32 = 5;
    pub const DEGENERATE: i32 = 6;
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) => exit::IO,
            CliError::MissingData(_) => exit::MISSING_DATA,
            CliError::NotConverged(_) => exit::NOT_CONVERGED,
            CliError::Degenerate(_) => exit::DEGENERATE,
            CliError::Failed(_) => exit::FAILED,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<smdenoise::Error> for CliError {
    fn from(e: smdenoise::Error) -> Self {
        use smdenoise::Error as E;
        match e {
            E::InvalidArgument(_) | E::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
            E::DegenerateTrace(_) => CliError::Degenerate(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
