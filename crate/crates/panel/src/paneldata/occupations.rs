//! Occupation task classes from survey task counts.

use std::collections::BTreeMap;

use super::records::TaskClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSurveyRow {
    pub occupation_code: u32,
    pub individual_id: u64,
    pub n_routine_tasks: u32,
    pub n_abstract_tasks: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationClass {
    pub class: TaskClass,
    /// Mean abstract task index, in [0, 1].
    pub abstract_intensity: f64,
    pub n_individuals: usize,
    /// Equal mean indices, resolved to Routine.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OccupationTable {
    pub classes: BTreeMap<u32, OccupationClass>,
    /// Occupations with no usable survey responses.
    pub unclassified: Vec<u32>,
}

impl OccupationTable {
    pub fn class_of(&self, occupation: u32) -> Option<TaskClass> {
        self.classes.get(&occupation).map(|c| c.class)
    }

    pub fn ties(&self) -> impl Iterator<Item = u32> + '_ {
        self.classes.iter().filter(|(_, c)| c.tie).map(|(&o, _)| o)
    }
}

/// Classifies each occupation by its larger mean task index. Respondents
/// reporting no tasks carry no index and are skipped; an occupation left
/// without respondents is unclassified. `known` lists occupations expected
/// in the table, so that ones missing from the survey are reported too.
pub fn classify_occupations(rows: &[TaskSurveyRow], known: &[u32]) -> OccupationTable {
    let mut acc: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
    for &o in known {
        acc.entry(o).or_default();
    }
    for r in rows {
        let e = acc.entry(r.occupation_code).or_default();
        let total = r.n_routine_tasks + r.n_abstract_tasks;
        if total == 0 {
            continue;
        }
        e.0 += r.n_routine_tasks as f64 / total as f64;
        e.1 += r.n_abstract_tasks as f64 / total as f64;
        e.2 += 1;
    }
    let mut table = OccupationTable::default();
    for (occ, (routine, abstract_, n)) in acc {
        if n == 0 {
            table.unclassified.push(occ);
            continue;
        }
        let (mr, ma) = (routine / n as f64, abstract_ / n as f64);
        let class = if ma > mr { TaskClass::Abstract } else { TaskClass::Routine };
        table.classes.insert(
            occ,
            OccupationClass { class, abstract_intensity: ma, n_individuals: n, tie: ma == mr },
        );
    }
    table
}
