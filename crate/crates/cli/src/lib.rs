//! Batch front end: simulate panels, run studies, render tables and
//! plot-ready CSVs, and validate estimators against simulator truth.

pub mod config;
pub mod montecarlo;
pub mod pipeline;
pub mod render;

use flowdecomp_panel::paneldata::PanelError;
use flowdecomp_studies::StudyError;
use thiserror::Error;

pub use config::{RunConfig, Study};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Panel(#[from] PanelError),
    #[error("study {study} failed: {source}")]
    Study { study: String, source: StudyError },
    /// Validation ran but at least one check failed.
    #[error("{failed} validation check(s) failed")]
    ValidationFailed { failed: usize },
}

impl CliError {
    /// Process exit code: 2 for usage and configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

pub(crate) fn in_study(study: &str) -> impl Fn(StudyError) -> CliError + '_ {
    move |source| CliError::Study { study: study.to_string(), source }
}
