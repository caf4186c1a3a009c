//! Worker transitions between a base and an end year, seen from one region.

use std::collections::HashSet;

use super::index::PanelIndex;
use super::records::{SpellRecord, TaskClass};
use super::PanelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Muni(u32),
    NonEmployed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Stayer,
    Displaced,
    Relocated,
    InflowFromNonEmp,
    InflowFromOtherRegion,
    NonEmployedBoth,
}

impl Classification {
    pub fn is_inflow(self) -> bool {
        matches!(self, Self::InflowFromNonEmp | Self::InflowFromOtherRegion)
    }

    /// Part of the region's base-period employment.
    pub fn is_base_employment(self) -> bool {
        matches!(self, Self::Stayer | Self::Displaced | Self::Relocated)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub worker_id: u64,
    /// The region from whose perspective the pair is classified.
    pub region: u32,
    pub base_year: i32,
    pub end_year: i32,
    pub origin: Location,
    pub destination: Location,
    pub task0: Option<TaskClass>,
    pub task1: Option<TaskClass>,
    pub classification: Classification,
    /// Full-time spells only.
    pub wage0: Option<f64>,
    pub wage1: Option<f64>,
    pub fte0: f64,
    pub fte1: f64,
    pub age0: u8,
}

fn location(s: &SpellRecord) -> Location {
    match (s.employed && s.in_native_sample(), s.muni_id) {
        (true, Some(m)) => Location::Muni(m),
        _ => Location::NonEmployed,
    }
}

/// Pure classification rule on locations.
pub fn classify_locations(origin: Location, destination: Location, region: u32) -> Option<Classification> {
    let r = Location::Muni(region);
    use Classification::*;
    match (origin, destination) {
        (o, d) if o == r && d == r => Some(Stayer),
        (o, Location::NonEmployed) if o == r => Some(Displaced),
        (o, Location::Muni(_)) if o == r => Some(Relocated),
        (Location::NonEmployed, d) if d == r => Some(InflowFromNonEmp),
        (Location::Muni(_), d) if d == r => Some(InflowFromOtherRegion),
        (Location::NonEmployed, Location::NonEmployed) => Some(NonEmployedBoth),
        _ => None,
    }
}

/// Classifies a worker's base/end pair relative to `region`. Returns `None`
/// when the pair never touches the region and the worker is employed in at
/// least one period.
pub fn classify_transition(
    spell0: &SpellRecord,
    spell1: &SpellRecord,
    region: u32,
) -> Result<Option<TransitionRecord>, PanelError> {
    if spell0.worker_id != spell1.worker_id {
        return Err(PanelError::MismatchedWorker { first: spell0.worker_id, second: spell1.worker_id });
    }
    if spell0.year >= spell1.year {
        return Err(PanelError::Window { base_year: spell0.year, end_year: spell1.year });
    }
    let origin = location(spell0);
    let destination = location(spell1);
    let Some(classification) = classify_locations(origin, destination, region) else {
        return Ok(None);
    };
    let employed0 = origin != Location::NonEmployed;
    let employed1 = destination != Location::NonEmployed;
    let h = (spell1.year - spell0.year) as i64;
    let age0 = if spell0.age > 0 { spell0.age } else { (spell1.age as i64 - h).clamp(0, 255) as u8 };
    let fte0 = if employed0 { spell0.fte() } else { 0.0 };
    let mut fte1 = if employed1 { spell1.fte() } else { 0.0 };
    if classification == Classification::Stayer {
        // Stayers carry their base weight so both periods count the same units.
        fte1 = fte0;
    }
    Ok(Some(TransitionRecord {
        worker_id: spell0.worker_id,
        region,
        base_year: spell0.year,
        end_year: spell1.year,
        origin,
        destination,
        task0: if employed0 { spell0.task_class } else { None },
        task1: if employed1 { spell1.task_class } else { None },
        classification,
        wage0: if employed0 && spell0.is_full_time() { spell0.log_daily_wage } else { None },
        wage1: if employed1 && spell1.is_full_time() { spell1.log_daily_wage } else { None },
        fte0,
        fte1,
        age0,
    }))
}

/// All transitions into, out of, or within the given regions over a window.
/// Each worker yields at most two records: one for the origin region and one
/// for a different destination region. Commuters are skipped.
pub fn build_transitions(
    index: &PanelIndex,
    base_year: i32,
    end_year: i32,
    regions: &HashSet<u32>,
) -> Result<Vec<TransitionRecord>, PanelError> {
    if base_year >= end_year {
        return Err(PanelError::Window { base_year, end_year });
    }
    let mut out = Vec::new();
    for w in 0..index.n_workers() {
        let spells = index.worker(w);
        let first = &spells[0];
        if first.nationality != super::records::Nationality::Native {
            continue;
        }
        let s0 = index.at_or_nonemployed(w, base_year);
        let s1 = index.at_or_nonemployed(w, end_year);
        let (o, d) = (location(&s0), location(&s1));
        let mut touched: Vec<u32> = Vec::with_capacity(2);
        if let Location::Muni(m) = o {
            if regions.contains(&m) {
                touched.push(m);
            }
        }
        if let Location::Muni(m) = d {
            if regions.contains(&m) && o != d {
                touched.push(m);
            }
        }
        for region in touched {
            if let Some(t) = classify_transition(&s0, &s1, region)? {
                out.push(t);
            }
        }
    }
    Ok(out)
}
