//! Spell ingestion, FTE weighting, transitions, flow accounts, wage
//! imputation and occupation task classes.

pub mod csvio;
pub mod flows;
pub mod imputation;
pub mod index;
pub mod occupations;
pub mod records;
pub mod transitions;

use thiserror::Error;

pub use csvio::{load_municipalities, load_spells, load_task_survey, LoadReport};
pub use flows::{aggregate_flows, ClassFlows, FlowAggregate, FlowReport, TaskFlows};
pub use imputation::{
    build_nonemployed_sample, impute_censored, impute_nonemployed_baseline, ImputationReport, ImputeMode,
    NonEmployedWorker,
};
pub use index::PanelIndex;
pub use occupations::{classify_occupations, OccupationClass, OccupationTable, TaskSurveyRow};
pub use records::{fte_weight, Education, HoursBand, MunicipalityInfo, Nationality, SpellRecord, TaskClass};
pub use transitions::{build_transitions, classify_transition, Classification, Location, TransitionRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PanelError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("duplicate record for worker {worker_id} in {year}")]
    Duplicate { worker_id: u64, year: i32 },
    #[error("spells belong to different workers ({first} and {second})")]
    MismatchedWorker { first: u64, second: u64 },
    #[error("invalid window {base_year}..{end_year}")]
    Window { base_year: i32, end_year: i32 },
    #[error("worker {worker_id}: missing task class in {which} period")]
    MissingTask { worker_id: u64, which: String },
    #[error("imputation: {0}")]
    Imputation(String),
    #[error("worker {worker_id} not in sample: {reason}")]
    NotInSample { worker_id: u64, reason: &'static str },
    #[error("invalid configuration: {0}")]
    Config(String),
}
