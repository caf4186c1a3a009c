//! Structural elasticities from reduced-form estimates, the efficiency-to-
//! headcount shock ratio, and bounds on selection bias from time-varying
//! wage components.

use thiserror::Error;

use crate::econometrics::{gaussian_mills, norm_inv_cdf};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructuralError {
    #[error("degenerate recovery: {quantity} is zero")]
    Degenerate { quantity: &'static str },
    #[error("shock ratio undefined: head-count shock is zero")]
    ZeroHeadcountShock,
    #[error("invalid input {name} = {value}")]
    InvalidInput { name: &'static str, value: f64 },
}

/// Reduced-form effects per unit head-count shock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedForm {
    pub beta_r: f64,
    pub gamma_r: f64,
    pub gamma_w: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralParams {
    pub eta_pop: f64,
    pub eta_eff: f64,
    pub phi: f64,
}

fn finite(name: &'static str, value: f64) -> Result<f64, StructuralError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(StructuralError::InvalidInput { name, value })
    }
}

/// Inverts the canonical model: η̄^P = β^R/γ^W, η̄^E = γ^R/γ^W − 1 + η̄^P,
/// φ = γ^W / (c + (η̄^E/η̄^P) β^R).
pub fn recover_structural(rf: &ReducedForm) -> Result<StructuralParams, StructuralError> {
    finite("beta_r", rf.beta_r)?;
    finite("gamma_r", rf.gamma_r)?;
    finite("gamma_w", rf.gamma_w)?;
    finite("c", rf.c)?;
    if rf.gamma_w == 0.0 {
        return Err(StructuralError::Degenerate { quantity: "gamma_w" });
    }
    let eta_pop = rf.beta_r / rf.gamma_w;
    let eta_eff = rf.gamma_r / rf.gamma_w - 1.0 + eta_pop;
    let denominator = if eta_pop == 0.0 {
        // β^R = 0: the ratio term vanishes whatever η̄^E is.
        rf.c
    } else {
        rf.c + eta_eff / eta_pop * rf.beta_r
    };
    if denominator == 0.0 {
        return Err(StructuralError::Degenerate { quantity: "c + (eta_eff/eta_pop) beta_r" });
    }
    Ok(StructuralParams { eta_pop, eta_eff, phi: rf.gamma_w / denominator })
}

/// What the recovery yields when the regional wage effect is mistaken for the
/// pure wage effect: γ^R replaces γ^W in η̄^P and in the numerator of φ, while
/// the efficiency-to-population elasticity ratio is held at its headline value.
pub fn recover_with_regional_wage(rf: &ReducedForm) -> Result<StructuralParams, StructuralError> {
    let headline = recover_structural(rf)?;
    if rf.gamma_r == 0.0 {
        return Err(StructuralError::Degenerate { quantity: "gamma_r" });
    }
    if headline.eta_pop == 0.0 {
        return Err(StructuralError::Degenerate { quantity: "eta_pop" });
    }
    let ratio = headline.eta_eff / headline.eta_pop;
    let eta_pop = rf.beta_r / rf.gamma_r;
    let denominator = rf.c + ratio * rf.beta_r;
    if denominator == 0.0 {
        return Err(StructuralError::Degenerate { quantity: "c + ratio beta_r" });
    }
    Ok(StructuralParams { eta_pop, eta_eff: ratio * eta_pop, phi: rf.gamma_r / denominator })
}

/// Region-wide commuter and total employment and wage bills at base and end.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShockTotals {
    pub commuter_heads0: f64,
    pub commuter_heads1: f64,
    pub total_heads0: f64,
    pub commuter_wage_bill0: f64,
    pub commuter_wage_bill1: f64,
    pub total_wage_bill0: f64,
}

/// c = wage-bill-share shock / head-count-share shock.
pub fn shock_ratio_c(t: &ShockTotals) -> Result<f64, StructuralError> {
    if !(t.total_heads0 > 0.0) {
        return Err(StructuralError::InvalidInput { name: "total_heads0", value: t.total_heads0 });
    }
    if !(t.total_wage_bill0 > 0.0) {
        return Err(StructuralError::InvalidInput { name: "total_wage_bill0", value: t.total_wage_bill0 });
    }
    let head_shock = (t.commuter_heads1 - t.commuter_heads0) / t.total_heads0;
    if head_shock == 0.0 {
        return Err(StructuralError::ZeroHeadcountShock);
    }
    let bill_shock = (t.commuter_wage_bill1 - t.commuter_wage_bill0) / t.total_wage_bill0;
    Ok(bill_shock / head_shock)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionBoundInputs {
    /// Std. dev. of the time-varying wage-growth component.
    pub sigma_de: f64,
    pub probit_a: f64,
    pub probit_b: f64,
    pub mean_shock: f64,
    pub rho_grid: Vec<f64>,
}

impl SelectionBoundInputs {
    pub fn new(sigma_de: f64, probit_a: f64, probit_b: f64, mean_shock: f64) -> Self {
        Self { sigma_de, probit_a, probit_b, mean_shock, rho_grid: vec![-1.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionBounds {
    /// Latent stay index a + b·mean_shock.
    pub pi: f64,
    pub mills: f64,
    pub dmills: f64,
    /// (ρ, bias) for each grid point.
    pub bias_by_rho: Vec<(f64, f64)>,
    pub bias_low: f64,
    pub bias_high: f64,
    /// φ(π)·b: effect of the shock on the probability of staying.
    pub marginal_stay_effect: f64,
}

/// Bias bounds ρ·σ_Δe·λ′(π)·b over the ρ grid.
pub fn selection_bounds(inputs: &SelectionBoundInputs) -> Result<SelectionBounds, StructuralError> {
    finite("sigma_de", inputs.sigma_de)?;
    finite("probit_a", inputs.probit_a)?;
    finite("probit_b", inputs.probit_b)?;
    finite("mean_shock", inputs.mean_shock)?;
    if inputs.sigma_de < 0.0 {
        return Err(StructuralError::InvalidInput { name: "sigma_de", value: inputs.sigma_de });
    }
    if inputs.rho_grid.is_empty() {
        return Err(StructuralError::InvalidInput { name: "rho_grid", value: f64::NAN });
    }
    let pi = inputs.probit_a + inputs.probit_b * inputs.mean_shock;
    let m = gaussian_mills(pi);
    let mut bias_by_rho = Vec::with_capacity(inputs.rho_grid.len());
    for &rho in &inputs.rho_grid {
        finite("rho", rho)?;
        bias_by_rho.push((rho, rho * inputs.sigma_de * m.dlambda * inputs.probit_b));
    }
    let bias_low = bias_by_rho.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let bias_high = bias_by_rho.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(SelectionBounds {
        pi,
        mills: m.lambda,
        dmills: m.dlambda,
        bias_by_rho,
        bias_low,
        bias_high,
        marginal_stay_effect: m.pdf * inputs.probit_b,
    })
}

/// Latent stay index implied by the observed stay share, Φ⁻¹(share).
pub fn pi_from_stay_share(share: f64) -> Result<f64, StructuralError> {
    if !(share > 0.0 && share < 1.0) {
        return Err(StructuralError::InvalidInput { name: "stay_share", value: share });
    }
    Ok(norm_inv_cdf(share))
}
