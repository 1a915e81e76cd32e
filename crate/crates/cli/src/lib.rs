//! Front end for the `aoi-corr` command: config ingestion, sweeps and
//! machine-readable reports.

pub mod args;
pub mod commands;
pub mod config;
pub mod sweep;

use aoi_corr::error::ErrorRatioError;
use aoi_corr::opt::OptError;
use aoi_corr::sim::SimError;
use aoi_corr::ModelError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_TOLERANCE: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("invalid configuration: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    ErrorRatio(#[from] ErrorRatioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error("{failed} of {total} compared metrics outside tolerance")]
    ToleranceExceeded { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::ToleranceExceeded { .. } => EXIT_TOLERANCE,
            _ => EXIT_VALIDATION,
        }
    }
}
