//! Command-line layer: argument parsing, file formats, run manifests and
//! figure recipes on top of `nonsig`.

pub mod app;
pub mod io;
pub mod manifest;
pub mod recipes;

use nonsig::{AnalysisError, BehaviorError, DomainError, ScanError};
use thiserror::Error;

pub use app::{dispatch, run};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Analysis(_) => 2,
            _ => 1,
        }
    }
}
