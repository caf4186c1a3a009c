//! Pure and regional wage effects, the composition decomposition of the
//! regional effect, and grouped pseudo-panels.

use std::collections::BTreeMap;

use flowdecomp_core::econometrics::{EstimationSpec, RegressionResult};
use flowdecomp_panel::paneldata::{aggregate_flows, Classification, Education, SpellRecord, TransitionRecord};

use crate::data::{StudyData, StudyOptions, Window};
use crate::design::{component, run, with_instruments, Component, DecompositionReport, MuniDesign, Sign, SHOCK};
use crate::employment::transitions;
use crate::StudyError;

pub const WAGES: &str = "wages";
pub const AGE: &str = "age";
pub const AGE_SQ: &str = "age_sq";

/// Individual stayer wage-growth regression with its residual dispersion.
#[derive(Debug, Clone, PartialEq)]
pub struct StayerFit {
    pub result: RegressionResult,
    /// Std of the structural residuals.
    pub residual_sd: f64,
    /// (municipality, base age) of each stayer in the sample.
    pub rows: Vec<(u32, u8)>,
}

impl StayerFit {
    /// Predicted age-profile component of wage growth at base age `a`.
    pub fn age_component(&self, a: u8) -> f64 {
        let a = a as f64;
        self.result.coef(AGE) * a + self.result.coef(AGE_SQ) * a * a / 100.0
    }
}

/// Δ log wage of full-time stayers on the shock with age and age²/100
/// controls, by 2SLS, unweighted, clustered by district. `keep` restricts
/// the stayer sample.
pub fn stayer_wage_regression(
    data: &StudyData,
    window: &Window,
    trans: &[TransitionRecord],
    keep: &dyn Fn(&TransitionRecord) -> bool,
    opts: &StudyOptions,
) -> Result<StayerFit, StudyError> {
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for t in trans {
        if t.classification != Classification::Stayer || !keep(t) {
            continue;
        }
        if let (Some(w0), Some(w1)) = (t.wage0, t.wage1) {
            y.push(w1 - w0);
            rows.push((t.region, t.age0));
        }
    }
    let individual_rows: Vec<(u32, f64)> = rows.iter().map(|&(m, _)| (m, 1.0)).collect();
    stayer_fit("pure wage effect", data, window, y, rows, &individual_rows, opts)
}

pub(crate) fn stayer_fit(
    label: &str,
    data: &StudyData,
    window: &Window,
    y: Vec<f64>,
    rows: Vec<(u32, u8)>,
    design_rows: &[(u32, f64)],
    opts: &StudyOptions,
) -> Result<StayerFit, StudyError> {
    if y.is_empty() {
        return Err(StudyError::Empty(format!("{label}: no full-time stayers")));
    }
    let d = MuniDesign::for_window(data, design_rows, window);
    let age: Vec<f64> = rows.iter().map(|r| r.1 as f64).collect();
    let age_sq: Vec<f64> = age.iter().map(|a| a * a / 100.0).collect();
    let spec = with_instruments(
        EstimationSpec::new(y.clone())
            .endog(SHOCK, d.shock.clone())
            .exog(AGE, age.clone())
            .exog(AGE_SQ, age_sq.clone())
            .weights(d.weights.clone()),
        &d.instruments,
    )
    .clusters(d.clusters.clone());
    let result = run(label, &spec, opts)?;
    let b = |n: &str| result.coef(n);
    let resid: Vec<f64> = (0..y.len())
        .map(|i| y[i] - b(flowdecomp_core::econometrics::INTERCEPT) - b(SHOCK) * d.shock[i] - b(AGE) * age[i] - b(AGE_SQ) * age_sq[i])
        .collect();
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let dof = (n - 4.0).max(1.0);
    let residual_sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / dof).sqrt();
    Ok(StayerFit { result, residual_sd, rows })
}

/// The pure wage effect γ^W.
pub fn pure_wage_effect(data: &StudyData, window: &Window, opts: &StudyOptions) -> Result<RegressionResult, StudyError> {
    let trans = transitions(data, window)?;
    Ok(stayer_wage_regression(data, window, &trans, &|_| true, opts)?.result)
}

/// Region-level terms of the mean-wage decomposition of one municipality,
/// over full-time natives:
/// ΔW̄ = (S̄1 − S̄0) − π_L(L̄0 − S̄0) + π_N(N̄1 − S̄1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuniWageTerms {
    pub muni_id: u32,
    pub w0: f64,
    pub w1: f64,
    pub stayers0: f64,
    pub stayers1: f64,
    pub leavers0: f64,
    pub entrants1: f64,
    /// Leavers' share of base full-time employment.
    pub pi_leave: f64,
    /// Entrants' share of end full-time employment.
    pub pi_enter: f64,
}

impl MuniWageTerms {
    pub fn stayer_term(&self) -> f64 {
        self.stayers1 - self.stayers0
    }

    /// (L̄0 − S̄0)·π_L, entering with a minus sign.
    pub fn outflow_term(&self) -> f64 {
        if self.pi_leave > 0.0 {
            self.pi_leave * (self.leavers0 - self.stayers0)
        } else {
            0.0
        }
    }

    pub fn inflow_term(&self) -> f64 {
        if self.pi_enter > 0.0 {
            self.pi_enter * (self.entrants1 - self.stayers1)
        } else {
            0.0
        }
    }

    pub fn change(&self) -> f64 {
        self.w1 - self.w0
    }

    pub fn identity_residual(&self) -> f64 {
        self.change() - (self.stayer_term() - self.outflow_term() + self.inflow_term())
    }
}

#[derive(Default)]
struct Acc {
    s0: (f64, f64),
    s1: (f64, f64),
    l0: (f64, f64),
    n1: (f64, f64),
}

fn add(a: &mut (f64, f64), v: f64) {
    a.0 += v;
    a.1 += 1.0;
}

fn mean(a: (f64, f64)) -> f64 {
    a.0 / a.1
}

/// Per-municipality wage terms. Municipalities without full-time stayers
/// in both periods are excluded.
pub fn regional_wage_terms(trans: &[TransitionRecord]) -> (Vec<MuniWageTerms>, Vec<(u32, &'static str)>) {
    let mut acc: BTreeMap<u32, Acc> = BTreeMap::new();
    for t in trans {
        let a = acc.entry(t.region).or_default();
        match t.classification {
            Classification::Stayer => {
                if let Some(w) = t.wage0 {
                    add(&mut a.s0, w);
                }
                if let Some(w) = t.wage1 {
                    add(&mut a.s1, w);
                }
            }
            Classification::Displaced | Classification::Relocated => {
                if let Some(w) = t.wage0 {
                    add(&mut a.l0, w);
                }
            }
            Classification::InflowFromNonEmp | Classification::InflowFromOtherRegion => {
                if let Some(w) = t.wage1 {
                    add(&mut a.n1, w);
                }
            }
            Classification::NonEmployedBoth => {}
        }
    }
    let mut out = Vec::new();
    let mut excluded = Vec::new();
    for (m, a) in acc {
        if a.s0.1 == 0.0 || a.s1.1 == 0.0 {
            excluded.push((m, "no full-time stayers in both periods"));
            continue;
        }
        let n0 = a.s0.1 + a.l0.1;
        let n1 = a.s1.1 + a.n1.1;
        let leavers0 = if a.l0.1 > 0.0 { mean(a.l0) } else { 0.0 };
        let entrants1 = if a.n1.1 > 0.0 { mean(a.n1) } else { 0.0 };
        out.push(MuniWageTerms {
            muni_id: m,
            w0: (a.s0.0 + a.l0.0) / n0,
            w1: (a.s1.0 + a.n1.0) / n1,
            stayers0: mean(a.s0),
            stayers1: mean(a.s1),
            leavers0,
            entrants1,
            pi_leave: a.l0.1 / n0,
            pi_enter: a.n1.1 / n1,
        });
    }
    (out, excluded)
}

/// Regional wage effect γ^R with its stayer, outflow and inflow terms on a
/// shared design weighted by base native FTE employment. Extras: the
/// individual pure wage effect, the composition effect (inflow minus
/// outflow term) and the age-selection term.
pub fn decompose_wages(data: &StudyData, window: &Window, opts: &StudyOptions) -> Result<DecompositionReport, StudyError> {
    let trans = transitions(data, window)?;
    let flows = aggregate_flows(&trans, false)?;
    let e0: BTreeMap<u32, f64> = flows.aggregates.iter().map(|a| (a.muni_id, a.e0)).collect();
    let (terms, excluded) = regional_wage_terms(&trans);
    let terms: Vec<MuniWageTerms> =
        terms.into_iter().filter(|t| data.munis.contains_key(&t.muni_id) && e0.contains_key(&t.muni_id)).collect();
    if terms.is_empty() {
        return Err(StudyError::Empty(format!("{WAGES}: no municipality with full-time wages in both periods")));
    }
    let rows: Vec<(u32, f64)> = terms.iter().map(|t| (t.muni_id, e0[&t.muni_id])).collect();
    let d = MuniDesign::for_window(data, &rows, window);
    let col = |f: fn(&MuniWageTerms) -> f64| terms.iter().map(f).collect::<Vec<f64>>();
    let total = component(WAGES, "regional_wage", None, &d.spec(col(MuniWageTerms::change)), opts)?;
    let components = vec![
        component(WAGES, "stayers", Some(Sign::Plus), &d.spec(col(MuniWageTerms::stayer_term)), opts)?,
        component(WAGES, "outflows", Some(Sign::Minus), &d.spec(col(MuniWageTerms::outflow_term)), opts)?,
        component(WAGES, "inflows", Some(Sign::Plus), &d.spec(col(MuniWageTerms::inflow_term)), opts)?,
    ];
    let mut report = DecompositionReport::new(WAGES, total, components, excluded);

    let fit = stayer_wage_regression(data, window, &trans, &|_| true, opts)?;
    let composition = component(WAGES, "composition", None, &d.spec(col(|t| t.inflow_term() - t.outflow_term())), opts)?;
    let age = age_selection(data, window, &fit, &rows, opts)?;
    report.extras.push(Component { name: "pure_wage".into(), sign: None, result: fit.result });
    report.extras.push(composition);
    report.extras.push(age);
    Ok(report)
}

/// Regression of stayers' mean predicted age-profile wage growth on the
/// shock, on the regional design.
fn age_selection(
    data: &StudyData,
    window: &Window,
    fit: &StayerFit,
    rows: &[(u32, f64)],
    opts: &StudyOptions,
) -> Result<Component, StudyError> {
    let mut acc: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    for &(m, a) in &fit.rows {
        add(acc.entry(m).or_default(), fit.age_component(a));
    }
    let kept: Vec<(u32, f64)> = rows.iter().copied().filter(|(m, _)| acc.contains_key(m)).collect();
    let y: Vec<f64> = kept.iter().map(|(m, _)| mean(acc[m])).collect();
    let d = MuniDesign::for_window(data, &kept, window);
    component(WAGES, "age_selection", None, &d.spec(y), opts)
}

/// Cells of the grouped pseudo-panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// Three education levels × three base-age bands × gender.
    EducationAgeGender,
    /// One group per municipality.
    Single,
}

fn age_band(age_at_base: i32) -> usize {
    match age_at_base {
        ..=29 => 0,
        30..=50 => 1,
        _ => 2,
    }
}

fn group_of(r: &SpellRecord, base_year: i32, grouping: Grouping) -> usize {
    match grouping {
        Grouping::Single => 0,
        Grouping::EducationAgeGender => {
            let edu = match r.education {
                Education::None => 0,
                Education::Apprenticeship => 1,
                Education::University => 2,
            };
            let band = age_band(r.age as i32 - (r.year - base_year));
            (edu * 3 + band) * 2 + usize::from(r.female)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoPanelResult {
    pub result: RegressionResult,
    pub cells_used: usize,
    pub cells_dropped: usize,
}

/// Group × municipality mean log-wage changes of full-time natives on the
/// shock, weighted by the group's base-year FTE employment.
pub fn pseudo_panel(
    data: &StudyData,
    window: &Window,
    grouping: Grouping,
    opts: &StudyOptions,
) -> Result<PseudoPanelResult, StudyError> {
    // (muni, group) -> (base FTE, base FT wage sum/count, end FT wage sum/count)
    let mut cells: BTreeMap<(u32, usize), (f64, (f64, f64), (f64, f64))> = BTreeMap::new();
    for r in data.index.records() {
        if !(r.employed && r.in_native_sample()) || (r.year != window.base_year && r.year != window.end_year) {
            continue;
        }
        let Some(m) = r.muni_id.filter(|m| data.munis.contains_key(m)) else { continue };
        let c = cells.entry((m, group_of(r, window.base_year, grouping))).or_default();
        let base = r.year == window.base_year;
        if base {
            c.0 += r.fte();
        }
        if r.is_full_time() {
            add(if base { &mut c.1 } else { &mut c.2 }, r.log_daily_wage.unwrap());
        }
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut dropped = 0;
    for (&(m, _), c) in &cells {
        if c.1 .1 == 0.0 || c.2 .1 == 0.0 || c.0 <= 0.0 {
            dropped += 1;
            continue;
        }
        rows.push((m, c.0));
        y.push(mean(c.2) - mean(c.1));
    }
    if rows.is_empty() {
        return Err(StudyError::Empty("pseudo-panel: every group cell is empty in one period".into()));
    }
    let d = MuniDesign::for_window(data, &rows, window);
    let result = run("pseudo-panel", &d.spec(y), opts)?;
    Ok(PseudoPanelResult { result, cells_used: rows.len(), cells_dropped: dropped })
}
