//! Monte Carlo comparison of estimators with simulator ground truth.

use std::fmt::Write as _;

use flowdecomp_core::econometrics::INTERCEPT;
use flowdecomp_panel::paneldata::classify_occupations;
use flowdecomp_panel::synthpanel::{simulate_panel, GroundTruth, SimConfig, SimOutput};
use flowdecomp_studies::first_stage::{DISTANCE, DISTANCE_SQ};
use flowdecomp_studies::{
    decompose_employment, decompose_wages, event_study, first_stage, pseudo_panel, EventOutcome, Grouping, StudyData,
    StudyOptions, Window, SHOCK,
};
use rayon::prelude::*;

use crate::{in_study, CliError};

/// Checks pass when the Monte Carlo mean is within this many Monte Carlo
/// standard errors of the truth.
pub const MC_SE_TOLERANCE: f64 = 2.0;
pub const MIN_FIRST_STAGE_F: f64 = 10.0;

/// Point estimates from one simulated panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub seed: u64,
    pub beta_r: f64,
    pub gamma_w: f64,
    pub gamma_r: f64,
    pub gamma_pp: f64,
    pub displacement: f64,
    pub crowding_out: f64,
    pub relocation: f64,
    /// Employment event-study coefficients for the three pre-base years.
    pub pre_event: Vec<(i32, f64)>,
    /// Constant, distance and distance² of the border first stage.
    pub first_stage: [f64; 3],
    pub first_stage_f: f64,
}

/// Study inputs built straight from simulator output.
pub fn study_data(out: &SimOutput, base_year: i32) -> Result<StudyData, CliError> {
    let munis: Vec<_> = out.municipalities.iter().map(|m| m.info()).collect();
    let known: Vec<u32> = out.spells.iter().filter_map(|r| r.occupation_code).collect();
    let occ = classify_occupations(&out.survey, &known);
    StudyData::new(out.spells.clone(), &munis, base_year, Some(occ)).map_err(in_study("data"))
}

/// Simulates one panel and estimates the headline coefficients with
/// analytic inference.
pub fn replicate(sim: &SimConfig, window: &Window) -> Result<Replication, CliError> {
    let out = simulate_panel(sim)?;
    let data = study_data(&out, window.base_year)?;
    let opts = StudyOptions::default();
    let emp = decompose_employment(&data, window, &opts).map_err(in_study("employment"))?;
    let wages = decompose_wages(&data, window, &opts).map_err(in_study("wages"))?;
    let pp = pseudo_panel(&data, window, Grouping::EducationAgeGender, &opts).map_err(in_study("pseudo-panel"))?;
    let pre: Vec<i32> = (window.base_year - 3..window.base_year).collect();
    let es = event_study(&data, &pre, EventOutcome::Employment, &opts).map_err(in_study("event-study"))?;
    let fs = first_stage(&data, window).map_err(in_study("first stage"))?;
    let coef = |name: &str| {
        emp.component(name).map(|c| c.coef()).ok_or_else(|| CliError::Io(format!("missing component {name}")))
    };
    let pure = wages.component("pure_wage").ok_or_else(|| CliError::Io("missing component pure_wage".into()))?;
    Ok(Replication {
        seed: sim.seed,
        beta_r: emp.total.coef(),
        gamma_w: pure.coef(),
        gamma_r: wages.total.coef(),
        gamma_pp: pp.result.coef(SHOCK),
        displacement: coef("displacement")?,
        crowding_out: coef("crowding_out")?,
        relocation: coef("relocation")?,
        pre_event: es.by_year.iter().map(|(y, r)| (*y, r.coef(SHOCK))).collect(),
        first_stage: [fs.result.coef(INTERCEPT), fs.result.coef(DISTANCE), fs.result.coef(DISTANCE_SQ)],
        first_stage_f: emp.total.result.first_stage_f.unwrap_or(f64::NAN),
    })
}

/// Replications with seeds `sim.seed, sim.seed + 1, ...`; results come back
/// in seed order whatever the thread schedule.
pub fn run(sim: &SimConfig, window: &Window, n: usize) -> Result<Vec<Replication>, CliError> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| replicate(&SimConfig { seed: sim.seed + i, ..sim.clone() }, window))
        .collect()
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn within(name: &str, xs: &[f64], truth: f64) -> Check {
    let (mean, se) = mean_and_se(xs);
    let z = (mean - truth) / se;
    Check {
        name: name.into(),
        passed: z.abs() <= MC_SE_TOLERANCE,
        detail: format!("mean {mean:.5} truth {truth:.5} mc_se {se:.5} z {z:.2}"),
    }
}

/// The oracle checks: headline coefficients and first-stage slopes within
/// [`MC_SE_TOLERANCE`] Monte Carlo SEs of truth, pre-period event-study
/// means within tolerance of zero, mean first-stage F above
/// [`MIN_FIRST_STAGE_F`], and the pseudo-panel mean strictly between the
/// regional and pure wage means.
pub fn checks(reps: &[Replication], truth: &GroundTruth) -> Vec<Check> {
    let col = |f: &dyn Fn(&Replication) -> f64| reps.iter().map(f).collect::<Vec<f64>>();
    let mut out = vec![
        within("beta_r", &col(&|r| r.beta_r), truth.beta_r),
        within("gamma_w", &col(&|r| r.gamma_w), truth.gamma_w),
        within("gamma_r", &col(&|r| r.gamma_r), truth.gamma_r),
        within("displacement", &col(&|r| r.displacement), truth.displacement),
        within("crowding_out", &col(&|r| r.crowding_out), truth.crowding_out),
        within("relocation", &col(&|r| r.relocation), truth.relocation),
    ];
    if let Some(first) = reps.first() {
        for (k, (year, _)) in first.pre_event.iter().enumerate() {
            let xs = col(&|r| r.pre_event.get(k).map_or(f64::NAN, |p| p.1));
            out.push(within(&format!("event_employment_{year}"), &xs, 0.0));
        }
    }
    for (k, name) in ["first_stage_constant", "first_stage_distance", "first_stage_distance_sq"].iter().enumerate() {
        out.push(within(name, &col(&|r| r.first_stage[k]), truth.first_stage[k]));
    }
    let f = col(&|r| r.first_stage_f);
    let (mean_f, _) = mean_and_se(&f);
    let min_f = f.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(Check {
        name: "first_stage_f".into(),
        passed: mean_f > MIN_FIRST_STAGE_F,
        detail: format!("mean {mean_f:.2} min {min_f:.2}"),
    });
    let (pp, _) = mean_and_se(&col(&|r| r.gamma_pp));
    let (gr, _) = mean_and_se(&col(&|r| r.gamma_r));
    let (gw, _) = mean_and_se(&col(&|r| r.gamma_w));
    out.push(Check {
        name: "pseudo_panel_ordering".into(),
        passed: gr.min(gw) < pp && pp < gr.max(gw),
        detail: format!("gamma_r {gr:.5} gamma_pp {pp:.5} gamma_w {gw:.5}"),
    });
    out
}

pub fn render_checks(checks: &[Check], n: usize, first_seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Validation over {n} replications, seeds {first_seed}..{}", first_seed + n as u64 - 1);
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in checks {
        let _ = writeln!(s, "{} {:<width$}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(s, "{} of {} checks passed", checks.len() - failed, checks.len());
    s
}
