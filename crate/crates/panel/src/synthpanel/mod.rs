//! Structural microsimulator producing spell panels with known effects.
//!
//! Each municipality has incumbents employed there in the base year plus two
//! pools of potential entrants: non-employed workers and workers employed
//! elsewhere. After the base year, exit, relocation and entry rates move with
//! the local log wage change γ^W·I_t in proportion to each type's supply
//! elasticity, so employment and wage aggregates follow the canonical model
//! in expectation. A worker-year without a record is non-employment.

pub mod config;
pub mod simulate;
pub mod truth;

use std::path::Path;

pub use config::{calibrated_types, FirstStage, SimConfig};
pub use simulate::{
    draw_shock, layout, simulate_panel, stratified_counts, task_survey, MunicipalitySpec, ShockPath, SimOutput,
    OUTSIDE_MUNI_BASE,
};
pub use truth::{ground_truth, GroundTruth};

use crate::paneldata::{csvio, PanelError};

pub const SPELLS_FILE: &str = "spells.csv";
pub const MUNICIPALITIES_FILE: &str = "municipalities.csv";
pub const TASKS_FILE: &str = "tasks.csv";
pub const TRUTH_FILE: &str = "truth.txt";

/// Writes spells, municipalities, the task survey and the ground truth
/// into `dir`.
pub fn write_outputs(out: &SimOutput, dir: &Path) -> Result<(), PanelError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| PanelError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    csvio::save_spells(&dir.join(SPELLS_FILE), &out.spells)?;
    let munis: Vec<_> = out.municipalities.iter().map(|m| m.info()).collect();
    csvio::save_municipalities(&dir.join(MUNICIPALITIES_FILE), &munis)?;
    csvio::save_task_survey(&dir.join(TASKS_FILE), &out.survey)?;
    out.truth.save(&dir.join(TRUTH_FILE))
}
