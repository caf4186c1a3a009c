//! Year-by-year regressions of outcomes relative to the base year.

use std::collections::BTreeMap;

use flowdecomp_core::econometrics::RegressionResult;
use flowdecomp_panel::paneldata::TaskClass;

use crate::data::{StudyData, StudyOptions};
use crate::design::{run, MuniDesign};
use crate::StudyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOutcome {
    /// Native FTE employment growth since the base year.
    Employment,
    RoutineEmployment,
    AbstractEmployment,
    /// Change in the abstract share of native FTE employment.
    AbstractShare,
    /// Growth in the apprentice head count.
    Apprentices,
}

impl EventOutcome {
    pub fn name(self) -> &'static str {
        match self {
            Self::Employment => "employment",
            Self::RoutineEmployment => "routine_employment",
            Self::AbstractEmployment => "abstract_employment",
            Self::AbstractShare => "abstract_share",
            Self::Apprentices => "apprentices",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStudy {
    pub outcome: EventOutcome,
    pub by_year: Vec<(i32, RegressionResult)>,
    /// Requested years without data.
    pub skipped: Vec<i32>,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    fte: f64,
    routine: f64,
    abstract_: f64,
    apprentices: f64,
}

/// One regression per year against the full shock; the first post-base
/// year uses the shock measured in that year.
pub fn event_study(
    data: &StudyData,
    years: &[i32],
    outcome: EventOutcome,
    opts: &StudyOptions,
) -> Result<EventStudy, StudyError> {
    let base = data.base_year;
    let mut counts: BTreeMap<(i32, u32), Counts> = BTreeMap::new();
    for r in data.index.records() {
        let Some(m) = r.muni_id.filter(|m| r.employed && data.munis.contains_key(m)) else { continue };
        let c = counts.entry((r.year, m)).or_default();
        if r.apprentice {
            c.apprentices += 1.0;
        } else if r.in_native_sample() {
            let f = r.fte();
            c.fte += f;
            match r.task_class {
                Some(TaskClass::Routine) => c.routine += f,
                Some(TaskClass::Abstract) => c.abstract_ += f,
                None => {}
            }
        }
    }
    let level = |c: &Counts| match outcome {
        EventOutcome::Employment => c.fte,
        EventOutcome::RoutineEmployment => c.routine,
        EventOutcome::AbstractEmployment => c.abstract_,
        EventOutcome::AbstractShare => c.fte,
        EventOutcome::Apprentices => c.apprentices,
    };
    let mut by_year = Vec::new();
    let mut skipped = Vec::new();
    for &t in years {
        if t == base {
            continue;
        }
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for &m in data.munis.keys() {
            let (Some(c0), Some(c1)) = (counts.get(&(base, m)), counts.get(&(t, m))) else { continue };
            let l0 = level(c0);
            if l0 <= 0.0 {
                continue;
            }
            let v = match outcome {
                EventOutcome::AbstractShare => {
                    if c1.fte <= 0.0 {
                        continue;
                    }
                    c1.abstract_ / c1.fte - c0.abstract_ / c0.fte
                }
                _ => (level(c1) - l0) / l0,
            };
            rows.push((m, l0));
            y.push(v);
        }
        if rows.is_empty() {
            skipped.push(t);
            continue;
        }
        let offset = if t == base + 1 { 1 } else { 2 };
        let d = MuniDesign::new(data, &rows, offset);
        let result = run(&format!("event study {} {t}", outcome.name()), &d.spec(y), opts)?;
        by_year.push((t, result));
    }
    Ok(EventStudy { outcome, by_year, skipped })
}
