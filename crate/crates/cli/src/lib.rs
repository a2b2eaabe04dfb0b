//! Manifest-driven experiment driver: JSON manifests in, CSV rows and a
//! JSON summary out, plus regression comparison against saved baselines.

pub mod compare;
pub mod csv;
pub mod manifest;
pub mod runner;

pub use compare::{compare_baseline, CompareReport, CompareTolerances};
pub use manifest::{ExperimentManifest, GridSpec, Kind};
pub use runner::{run_experiment, write_output, ResultRecord, RunOutput};

use thiserror::Error;

/// Driver failures, each mapped to a process exit code.
#[derive(Debug, Clone, Error)]
pub enum CliError {
    /// Bad manifest, bad arguments, or mismatched inputs (exit 2).
    #[error("{0}")]
    Validation(String),
    /// The computation ran but missed its numerical contract (exit 3).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}
