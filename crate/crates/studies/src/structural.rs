//! Structural parameters, the shock ratio c, and selection-bias bounds
//! estimated from a panel.

use flowdecomp_core::econometrics::{probit_mle, ProbitResult};
use flowdecomp_core::structural::{
    pi_from_stay_share, recover_structural, recover_with_regional_wage, selection_bounds, shock_ratio_c, ReducedForm,
    SelectionBoundInputs, SelectionBounds, StructuralParams,
};
use flowdecomp_panel::paneldata::Classification;
use nalgebra::DMatrix;

use crate::data::{StudyData, StudyOptions, Window};
use crate::design::SHOCK;
use crate::employment::{decompose_employment, transitions};
use crate::wages::{decompose_wages, stayer_wage_regression};
use crate::StudyError;

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralReport {
    pub reduced_form: ReducedForm,
    pub params: StructuralParams,
    /// Recovery with the regional wage effect in place of the pure one.
    pub cautionary: Option<StructuralParams>,
    pub sigma_de: f64,
    /// Stay probit on [1, ΔI] over base-year incumbents.
    pub probit: ProbitResult,
    pub stay_share: f64,
    /// Mean shock over the probit sample.
    pub mean_shock: f64,
    /// Bounds with π from the probit index.
    pub bounds_probit: SelectionBounds,
    /// Bounds with π = Φ⁻¹(stay share).
    pub bounds_share: SelectionBounds,
}

/// c over the border region.
pub fn shock_ratio(data: &StudyData) -> Result<f64, StudyError> {
    Ok(shock_ratio_c(&data.shock_totals)?)
}

pub fn structural_study(data: &StudyData, window: &Window, opts: &StudyOptions) -> Result<StructuralReport, StudyError> {
    let employment = decompose_employment(data, window, opts)?;
    let wages = decompose_wages(data, window, opts)?;
    let trans = transitions(data, window)?;
    let fit = stayer_wage_regression(data, window, &trans, &|_| true, opts)?;
    let rf = ReducedForm {
        beta_r: employment.total.coef(),
        gamma_r: wages.total.coef(),
        gamma_w: fit.result.coef(SHOCK),
        c: shock_ratio(data)?,
    };
    let params = recover_structural(&rf)?;
    let cautionary = recover_with_regional_wage(&rf).ok();

    let mut y = Vec::new();
    let mut shock = Vec::new();
    for t in trans.iter().filter(|t| t.classification.is_base_employment()) {
        let Some(s) = data.shock(t.region, window) else { continue };
        y.push(if t.classification == Classification::Stayer { 1.0 } else { 0.0 });
        shock.push(s);
    }
    if y.is_empty() {
        return Err(StudyError::Empty("structural: no base-year incumbents".into()));
    }
    let n = y.len();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { shock[i] });
    let probit = probit_mle(&y, &x, &vec![1.0; n])
        .map_err(|source| StudyError::Estimation { study: "stay probit".into(), source })?;
    let stay_share = y.iter().sum::<f64>() / n as f64;
    let mean_shock = shock.iter().sum::<f64>() / n as f64;
    let (a, b) = (probit.coefficients[0], probit.coefficients[1]);
    let bounds_probit = selection_bounds(&SelectionBoundInputs::new(fit.residual_sd, a, b, mean_shock))?;
    let pi_share = pi_from_stay_share(stay_share)?;
    let bounds_share = selection_bounds(&SelectionBoundInputs::new(fit.residual_sd, pi_share - b * mean_shock, b, mean_shock))?;
    Ok(StructuralReport {
        reduced_form: rf,
        params,
        cautionary,
        sigma_de: fit.residual_sd,
        probit,
        stay_share,
        mean_shock,
        bounds_probit,
        bounds_share,
    })
}
