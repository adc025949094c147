//! Library side of the `readout` command: configuration parsing, the
//! evaluation drivers and the output tables. `main.rs` only wires these to
//! the command line.

pub mod config;
pub mod output;
pub mod run;

use readout_core::ReadoutError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] ReadoutError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("self-test failed: {0}")]
    SelfTest(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_INVALID,
            CliError::Compute(e) => match e {
                ReadoutError::InvalidInput(_) => EXIT_INVALID,
                ReadoutError::BudgetExceeded { .. } | ReadoutError::MassDeficit { .. } => EXIT_BUDGET,
                ReadoutError::NonConvergence { .. } | ReadoutError::NotPositiveSemidefinite { .. } => {
                    EXIT_CONVERGENCE
                }
            },
            CliError::SelfTest(_) => EXIT_CONVERGENCE,
        }
    }
}
