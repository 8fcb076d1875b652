//! Experiment orchestration for the `lgc` binary: manifest parsing, the
//! activation × range × regime grid, per-cell output trees, and reports.

pub mod experiment;
pub mod manifest;
pub mod report;

use std::process::ExitCode;

/// Error categories mapped onto the process exit codes: 1 usage,
/// 2 data, 3 numerical.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
        }
    }
}

impl From<lgc_core::Error> for CliError {
    fn from(e: lgc_core::Error) -> Self {
        use lgc_core::Error as E;
        match e {
            E::NonFinite { .. } | E::EigenNoConvergence(_) => CliError::Numerical(e.to_string()),
            E::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
