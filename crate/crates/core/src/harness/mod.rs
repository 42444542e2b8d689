//! Experiment configuration, the run pipeline and artifact output.

mod artifacts;
mod config;
mod pipeline;

use std::path::PathBuf;
use thiserror::Error;

pub use artifacts::{export_snapshot, fmt, mesh_obj, write_table};
pub use config::{AuditBatch, AuditConfig, AuditExpectation, DiagnosticsSchedule, ExperimentConfig, GridConfig, PinchConfig, VerifyConfig};
pub use pipeline::{
    batch, execute, load_experiment, run_audit, run_experiment, run_verify, verify_config, write_artifacts, AuditOutcome, BatchRow, Checks,
    Overrides, ParabolicRow, RunOutcome, Summary, VerifyOutcome, VolumeRow,
};

/// Failure categories of the harness, each with its own exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("engine error: {0}")]
    Engine(String),
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("i/o error at {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Engine(_) => 3,
            HarnessError::Analysis(_) => 4,
            HarnessError::Io { .. } => 5,
        }
    }
}
