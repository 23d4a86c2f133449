//! Command-line harness around `spinal-core`: JSON and CSV formats, Monte
//! Carlo orchestration, chi-square tests and check reports.

pub mod checks;
pub mod codec;
pub mod montecarlo;
pub mod report;
pub mod stats;

pub use report::{CheckReport, Status};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] spinal_core::Error),
    #[error("malformed input: {0}")]
    Input(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// 2 for usage, input and domain problems; 3 for numeric and capacity
    /// failures.
    pub fn exit_code(&self) -> i32 {
        use spinal_core::Error as E;
        match self {
            Error::Core(E::Numeric(_) | E::Capacity { .. } | E::KernelInconsistency(_)) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        use spinal_core::Error as E;
        match self {
            Error::Core(E::Validation(_)) => "validation",
            Error::Core(E::Domain(_)) => "domain",
            Error::Core(E::Capacity { .. }) => "capacity",
            Error::Core(E::Numeric(_)) => "numeric",
            Error::Core(E::KernelInconsistency(_)) => "kernel-inconsistency",
            Error::Input(_) => "input",
            Error::Usage(_) => "usage",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
