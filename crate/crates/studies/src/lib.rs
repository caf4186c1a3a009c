//! Regional-effect studies on spell panels: employment and wage
//! decompositions, event studies, pseudo-panels, subgroups and the
//! structural pipeline.

pub mod data;
pub mod design;
pub mod employment;
pub mod event;
pub mod first_stage;
pub mod structural;
pub mod subgroups;
pub mod wages;

use flowdecomp_core::econometrics::EstimationError;
use flowdecomp_core::structural::StructuralError;
use flowdecomp_panel::paneldata::PanelError;
use thiserror::Error;

pub use data::{MuniShock, StudyData, StudyOptions, Window};
pub use design::{Component, DecompositionReport, MuniDesign, Sign, SHOCK};
pub use employment::{decompose_employment, decompose_routine};
pub use event::{event_study, EventOutcome, EventStudy};
pub use first_stage::{first_stage, FirstStageFit};
pub use structural::{shock_ratio, structural_study, StructuralReport};
pub use subgroups::{subgroup_study, Subgroup, SubgroupResult};
pub use wages::{decompose_wages, pseudo_panel, pure_wage_effect, regional_wage_terms, Grouping, MuniWageTerms, PseudoPanelResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StudyError {
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error("{study}: {source}")]
    Estimation { study: String, source: EstimationError },
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error("{0}")]
    Empty(String),
}
