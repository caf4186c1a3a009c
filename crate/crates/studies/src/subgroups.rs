//! Displacement and pure wage effects for worker subgroups.

use std::collections::BTreeMap;

use flowdecomp_core::econometrics::RegressionResult;
use flowdecomp_panel::paneldata::{
    aggregate_flows, build_nonemployed_sample, imputation::mean_log_wage_by_year, TaskClass, TransitionRecord,
};

use crate::data::{StudyData, StudyOptions, Window};
use crate::design::{run, MuniDesign};
use crate::employment::transitions;
use crate::wages::{stayer_fit, stayer_wage_regression};
use crate::StudyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subgroup {
    /// Natives not employed in the base year whose last recent spell was
    /// in a study municipality.
    NonEmployed,
    Age50Plus,
    Routine,
    Abstract,
}

impl Subgroup {
    pub fn name(self) -> &'static str {
        match self {
            Self::NonEmployed => "non_employed",
            Self::Age50Plus => "age_50_plus",
            Self::Routine => "routine",
            Self::Abstract => "abstract",
        }
    }

    fn keep(self, t: &TransitionRecord) -> bool {
        match self {
            Self::Age50Plus => t.age0 >= 50,
            Self::Routine => t.task0 == Some(TaskClass::Routine),
            Self::Abstract => t.task0 == Some(TaskClass::Abstract),
            Self::NonEmployed => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupResult {
    pub subgroup: Subgroup,
    /// Displacement effect. For the non-employed, the negative of the
    /// job-finding-share coefficient.
    pub displacement: RegressionResult,
    pub pure_wage: RegressionResult,
    pub n_workers: usize,
}

impl SubgroupResult {
    /// The displacement coefficient under the reporting sign convention.
    pub fn displacement_effect(&self) -> f64 {
        let b = self.displacement.coef(crate::design::SHOCK);
        if self.subgroup == Subgroup::NonEmployed {
            -b
        } else {
            b
        }
    }
}

pub fn subgroup_study(
    data: &StudyData,
    window: &Window,
    subgroup: Subgroup,
    opts: &StudyOptions,
) -> Result<SubgroupResult, StudyError> {
    let label = format!("subgroup {}", subgroup.name());
    if subgroup == Subgroup::NonEmployed {
        return nonemployed_study(data, window, opts);
    }
    let trans = transitions(data, window)?;
    let kept: Vec<TransitionRecord> =
        trans.iter().filter(|t| t.classification.is_base_employment() && subgroup.keep(t)).cloned().collect();
    if kept.is_empty() {
        return Err(StudyError::Empty(format!("{label}: empty subgroup")));
    }
    let flows = aggregate_flows(&kept, false)?;
    let aggs: Vec<_> = flows.aggregates.iter().filter(|a| data.munis.contains_key(&a.muni_id)).collect();
    let rows: Vec<(u32, f64)> = aggs.iter().map(|a| (a.muni_id, a.e0)).collect();
    let d = MuniDesign::for_window(data, &rows, window);
    let displacement = run(&label, &d.spec(aggs.iter().map(|a| a.exit_share()).collect()), opts)?;
    let fit = stayer_wage_regression(data, window, &trans, &|t| subgroup.keep(t), opts)?;
    Ok(SubgroupResult { subgroup, displacement, pure_wage: fit.result, n_workers: kept.len() })
}

fn nonemployed_study(data: &StudyData, window: &Window, opts: &StudyOptions) -> Result<SubgroupResult, StudyError> {
    let label = "subgroup non_employed";
    let regions = data.regions();
    let mean_wage = mean_log_wage_by_year(data.index.records(), &regions);
    let sample = build_nonemployed_sample(&data.index, window.base_year, &regions, &mean_wage);
    if sample.is_empty() {
        return Err(StudyError::Empty(format!("{label}: empty subgroup")));
    }
    let mut finding: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    let mut wage_y = Vec::new();
    let mut wage_rows = Vec::new();
    for s in &sample {
        let Some(w) = data.index.find(s.worker_id) else { continue };
        let end = data.index.at(w, window.end_year).filter(|r| r.employed && r.in_native_sample());
        let f = finding.entry(s.origin_muni).or_default();
        f.1 += 1.0;
        if end.is_some() {
            f.0 += 1.0;
        }
        // Wage change on re-employment in the origin municipality.
        if let (Some(r), Some(w0)) = (end, s.imputed_wage0) {
            if r.muni_id == Some(s.origin_muni) && r.is_full_time() {
                wage_y.push(r.log_daily_wage.unwrap() - w0);
                wage_rows.push((s.origin_muni, s.age0));
            }
        }
    }
    let rows: Vec<(u32, f64)> = finding.iter().map(|(&m, v)| (m, v.1)).collect();
    let y: Vec<f64> = finding.values().map(|v| v.0 / v.1).collect();
    let d = MuniDesign::for_window(data, &rows, window);
    let displacement = run(label, &d.spec(y), opts)?;
    let unit: Vec<(u32, f64)> = wage_rows.iter().map(|&(m, _)| (m, 1.0)).collect();
    let fit = stayer_fit(label, data, window, wage_y, wage_rows, &unit, opts)?;
    Ok(SubgroupResult { subgroup: Subgroup::NonEmployed, displacement, pure_wage: fit.result, n_workers: sample.len() })
}
