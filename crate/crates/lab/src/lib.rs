//! Command-line experiments over the `grushin` library: seeded runs, gated
//! summaries and deterministic CSV/JSON reports.

pub mod cli;
pub mod commands;
pub mod emit;
pub mod families;
pub mod params;
pub mod potential;
pub mod report;

pub use report::{Field, Format, Gate, Kind, Outcome, Report, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config or parameter values; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Unreadable input or unwritable output; exit code 2.
    #[error("{0}")]
    Io(String),
    /// The library refused or failed a computation; exit code 1.
    #[error("{0}")]
    Numerical(grushin::Error),
}

impl From<grushin::Error> for CliError {
    fn from(e: grushin::Error) -> Self {
        match e {
            grushin::Error::InvalidArgument(_) | grushin::Error::InvalidSplit | grushin::Error::DimensionMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}
