use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Failure while reading or writing one of the file formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Malformed(String),
    #[error(transparent)]
    Space(#[from] umetric_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: FormatError },
    #[error("invalid config file {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] umetric_core::Error),
    #[error("{}: {source}", path.display())]
    Output { path: PathBuf, source: io::Error },
    /// A check ran to completion and found a problem.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } | CliError::Config { .. } => 2,
            CliError::Core(e) => core_exit_code(e),
            CliError::Output { .. } | CliError::Failed(_) => 1,
        }
    }
}

/// Bad arguments are usage errors; everything else is a property of the data.
fn core_exit_code(e: &umetric_core::Error) -> i32 {
    use umetric_core::Error as E;
    match e {
        E::InvalidExponent(_)
        | E::InvalidBound(_)
        | E::InvalidSpec(_)
        | E::InvalidTolerance { .. }
        | E::InvalidRadius { .. }
        | E::PointOutOfRange { .. }
        | E::UnknownLabel(_) => 2,
        e if e.is_shape_error() => 2,
        _ => 1,
    }
}
