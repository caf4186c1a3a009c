//! Employment decompositions: total, displacement, crowding-out and
//! relocation, and the same split within routine jobs.

use std::collections::BTreeMap;

use flowdecomp_panel::paneldata::{aggregate_flows, build_transitions, Classification, FlowReport, TransitionRecord};

use crate::data::{StudyData, StudyOptions, Window};
use crate::design::{component, DecompositionReport, MuniDesign, Sign};
use crate::StudyError;

pub const EMPLOYMENT: &str = "employment";
pub const ROUTINE: &str = "routine";

pub(crate) fn transitions(data: &StudyData, window: &Window) -> Result<Vec<TransitionRecord>, StudyError> {
    Ok(build_transitions(&data.index, window.base_year, window.end_year, &data.regions())?)
}

pub(crate) fn flows(data: &StudyData, window: &Window, task_split: bool) -> Result<FlowReport, StudyError> {
    Ok(aggregate_flows(&transitions(data, window)?, task_split)?)
}

/// Regional employment growth and its three flow components, all on one
/// shared municipality design weighted by base-year native FTE employment.
pub fn decompose_employment(data: &StudyData, window: &Window, opts: &StudyOptions) -> Result<DecompositionReport, StudyError> {
    let report = flows(data, window, false)?;
    let aggs: Vec<_> = report.aggregates.iter().filter(|a| data.munis.contains_key(&a.muni_id)).collect();
    if aggs.is_empty() {
        return Err(StudyError::Empty(format!("{EMPLOYMENT}: no municipality with base employment")));
    }
    let rows: Vec<(u32, f64)> = aggs.iter().map(|a| (a.muni_id, a.e0)).collect();
    let design = MuniDesign::for_window(data, &rows, window);
    let col = |f: &dyn Fn(&flowdecomp_panel::paneldata::FlowAggregate) -> f64| aggs.iter().map(|a| f(a)).collect::<Vec<f64>>();
    let total = component(EMPLOYMENT, "employment", None, &design.spec(col(&|a| a.growth())), opts)?;
    let components = vec![
        component(EMPLOYMENT, "displacement", Some(Sign::Minus), &design.spec(col(&|a| a.exit_share())), opts)?,
        component(EMPLOYMENT, "crowding_out", Some(Sign::Plus), &design.spec(col(&|a| a.inflow_share())), opts)?,
        component(EMPLOYMENT, "relocation", Some(Sign::Minus), &design.spec(col(&|a| a.relocate_share())), opts)?,
    ];
    let excluded = report.excluded.iter().map(|&m| (m, "zero base employment")).collect();
    Ok(DecompositionReport::new(EMPLOYMENT, total, components, excluded))
}

/// Routine employment growth split into displacement, crowding-out,
/// relocation, individual upgrading and downgrading. Extras: abstract
/// employment growth and, given an occupation table, the change in
/// stayers' abstract intensity.
pub fn decompose_routine(data: &StudyData, window: &Window, opts: &StudyOptions) -> Result<DecompositionReport, StudyError> {
    let trans = transitions(data, window)?;
    let report = aggregate_flows(&trans, true)?;
    let mut excluded = Vec::new();
    let mut rows = Vec::new();
    let mut ys: [Vec<f64>; 6] = Default::default();
    let mut abstract_rows = Vec::new();
    let mut abstract_growth = Vec::new();
    for a in report.aggregates.iter().filter(|a| data.munis.contains_key(&a.muni_id)) {
        let t = a.tasks.as_ref().expect("task split requested");
        let r = &t.routine;
        let e0 = r.e0();
        if let Some(g) = t.abstract_.growth() {
            abstract_rows.push((a.muni_id, t.abstract_.e0()));
            abstract_growth.push(g);
        }
        if e0 <= 0.0 {
            excluded.push((a.muni_id, "zero base routine employment"));
            continue;
        }
        rows.push((a.muni_id, e0));
        let vals = [r.growth().unwrap(), r.e_exit / e0, r.e_inflow / e0, r.e_relocate / e0, r.e_switch_out / e0, r.e_switch_in / e0];
        for (y, v) in ys.iter_mut().zip(vals) {
            y.push(v);
        }
    }
    excluded.extend(report.excluded.iter().map(|&m| (m, "zero base employment")));
    if rows.is_empty() {
        return Err(StudyError::Empty(format!("{ROUTINE}: no municipality with base routine employment")));
    }
    let design = MuniDesign::for_window(data, &rows, window);
    let [total, exit, inflow, reloc, up, down] = ys;
    let total = component(ROUTINE, "routine", None, &design.spec(total), opts)?;
    let components = vec![
        component(ROUTINE, "displacement", Some(Sign::Minus), &design.spec(exit), opts)?,
        component(ROUTINE, "crowding_out", Some(Sign::Plus), &design.spec(inflow), opts)?,
        component(ROUTINE, "relocation", Some(Sign::Minus), &design.spec(reloc), opts)?,
        component(ROUTINE, "upgrading", Some(Sign::Minus), &design.spec(up), opts)?,
        component(ROUTINE, "downgrading", Some(Sign::Plus), &design.spec(down), opts)?,
    ];
    let mut out = DecompositionReport::new(ROUTINE, total, components, excluded);
    if !abstract_rows.is_empty() {
        let d = MuniDesign::for_window(data, &abstract_rows, window);
        out.extras.push(component(ROUTINE, "abstract", None, &d.spec(abstract_growth), opts)?);
    }
    if let Some(table) = &data.occupations {
        let mut acc: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
        for t in trans.iter().filter(|t| t.classification == Classification::Stayer) {
            let Some(w) = data.index.find(t.worker_id) else { continue };
            let occ = |year| data.index.at(w, year).and_then(|s| s.occupation_code);
            let intensity = |o: Option<u32>| o.and_then(|o| table.classes.get(&o)).map(|c| c.abstract_intensity);
            if let (Some(i0), Some(i1)) = (intensity(occ(window.base_year)), intensity(occ(window.end_year))) {
                let e = acc.entry(t.region).or_default();
                e.0 += t.fte0 * (i1 - i0);
                e.1 += t.fte0;
            }
        }
        let rows: Vec<(u32, f64)> = acc.iter().filter(|(_, v)| v.1 > 0.0).map(|(&m, v)| (m, v.1)).collect();
        if !rows.is_empty() {
            let y = acc.values().filter(|v| v.1 > 0.0).map(|v| v.0 / v.1).collect();
            let d = MuniDesign::for_window(data, &rows, window);
            out.extras.push(component(ROUTINE, "abstract_intensity_stayers", None, &d.spec(y), opts)?);
        }
    }
    Ok(out)
}
