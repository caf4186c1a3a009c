//! Closed-form canonical model of a regional labor-supply shock.
//!
//! Workers of several types are perfect substitutes in production. Each type
//! carries an efficiency `theta` and a supply elasticity `eta`. The model
//! maps an immigration shock measured in head counts into the pure wage,
//! employment and regional (composition-contaminated) wage responses.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("economy has no worker mass (all type counts are zero)")]
    EmptyEconomy,
    #[error("singular equilibrium: 1 - phi * eta_eff = {denominator:e}")]
    SingularEquilibrium { denominator: f64 },
    #[error("elasticity undefined: baseline employment probability is zero")]
    UndefinedElasticity,
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> ModelError {
    ModelError::InvalidParameter { name, value, reason }
}

/// Inverse elasticity of capital supply. `Infinite` is exact, not a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Infinite,
}

/// One native worker type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerTypeSpec {
    /// Productive efficiency; multiplies the base price of labor.
    pub theta: f64,
    /// Labor supply elasticity, d log E_k / d log w.
    pub eta: f64,
    /// Head-count (or FTE) mass.
    pub count: f64,
}

impl WorkerTypeSpec {
    pub fn new(theta: f64, eta: f64, count: f64) -> Self {
        Self { theta, eta, count }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(invalid("theta", self.theta, "must be positive and finite"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(invalid("eta", self.eta, "must be non-negative and finite"));
        }
        if !(self.count >= 0.0 && self.count.is_finite()) {
            return Err(invalid("count", self.count, "must be non-negative and finite"));
        }
        Ok(())
    }
}

/// Structural parameters of a local economy.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomySpec {
    /// Capital cost share, in (0, 1).
    pub alpha: f64,
    pub lambda_capital: Lambda,
    /// Total factor productivity. Shifts wage levels only.
    pub tfp: f64,
    pub types: Vec<WorkerTypeSpec>,
    /// Explicit inverse labor demand elasticity. When set it replaces the
    /// Cobb-Douglas value, which is confined to [-alpha, 0].
    pub phi_override: Option<f64>,
}

impl EconomySpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", self.alpha, "must lie in (0, 1)"));
        }
        if let Lambda::Finite(l) = self.lambda_capital {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(invalid("lambda_capital", l, "must be non-negative"));
            }
        }
        if !(self.tfp > 0.0 && self.tfp.is_finite()) {
            return Err(invalid("tfp", self.tfp, "must be positive"));
        }
        if let Some(phi) = self.phi_override {
            if !(phi <= 0.0 && phi.is_finite()) {
                return Err(invalid("phi_override", phi, "must be non-positive and finite"));
            }
        }
        for t in &self.types {
            t.validate()?;
        }
        if self.types.iter().all(|t| t.count == 0.0) {
            return Err(ModelError::EmptyEconomy);
        }
        Ok(())
    }

    /// Inverse labor demand elasticity used by the economy.
    pub fn phi(&self) -> Result<f64, ModelError> {
        match self.phi_override {
            Some(phi) => Ok(phi),
            None => inverse_demand_elasticity(self.alpha, self.lambda_capital),
        }
    }
}

/// Immigration shock: head-count share and efficiency-to-headcount ratio `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockSpec {
    pub d_i_head: f64,
    pub c_ratio: f64,
}

impl ShockSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.d_i_head >= 0.0 && self.d_i_head.is_finite()) {
            return Err(invalid("d_i_head", self.d_i_head, "must be non-negative"));
        }
        if !(self.c_ratio > 0.0 && self.c_ratio.is_finite()) {
            return Err(invalid("c_ratio", self.c_ratio, "must be positive"));
        }
        Ok(())
    }
}

/// Responses per unit of head-count shock. Multiply by `d_i_head` for levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelResponses {
    pub phi: f64,
    pub eta_eff: f64,
    pub eta_pop: f64,
    /// d log w / dI^P
    pub pure_wage: f64,
    /// d log E / dI^P
    pub employment: f64,
    /// d log w̄^R / dI^P
    pub regional_wage: f64,
}

/// φ = −αλ/(1−α+λ); −α in the fixed-capital limit.
pub fn inverse_demand_elasticity(alpha: f64, lambda: Lambda) -> Result<f64, ModelError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", alpha, "must lie in (0, 1)"));
    }
    match lambda {
        Lambda::Infinite => Ok(-alpha),
        Lambda::Finite(l) if l >= 0.0 && l.is_finite() => {
            if l == 0.0 {
                Ok(0.0)
            } else {
                Ok(-alpha * l / (1.0 - alpha + l))
            }
        }
        Lambda::Finite(l) => Err(invalid("lambda_capital", l, "must be non-negative")),
    }
}

/// Efficiency-weighted and population-weighted aggregate supply elasticities.
pub fn weighted_elasticities(types: &[WorkerTypeSpec]) -> Result<(f64, f64), ModelError> {
    for t in types {
        t.validate()?;
    }
    let (mut te, mut ten, mut e, mut en) = (0.0, 0.0, 0.0, 0.0);
    for t in types {
        te += t.theta * t.count;
        ten += t.theta * t.count * t.eta;
        e += t.count;
        en += t.count * t.eta;
    }
    if e == 0.0 {
        return Err(ModelError::EmptyEconomy);
    }
    Ok((ten / te, en / e))
}

/// Responses from aggregate parameters directly.
pub fn responses_from_parameters(
    phi: f64,
    eta_eff: f64,
    eta_pop: f64,
    c_ratio: f64,
) -> Result<ModelResponses, ModelError> {
    for (name, v) in [("phi", phi), ("eta_eff", eta_eff), ("eta_pop", eta_pop), ("c_ratio", c_ratio)] {
        if !v.is_finite() {
            return Err(invalid(name, v, "must be finite"));
        }
    }
    let denominator = 1.0 - phi * eta_eff;
    if denominator == 0.0 {
        return Err(ModelError::SingularEquilibrium { denominator });
    }
    let pure_wage = phi * c_ratio / denominator;
    Ok(ModelResponses {
        phi,
        eta_eff,
        eta_pop,
        pure_wage,
        employment: eta_pop * pure_wage,
        regional_wage: pure_wage * (1.0 + eta_eff - eta_pop),
    })
}

pub fn forward_responses(
    economy: &EconomySpec,
    shock: &ShockSpec,
) -> Result<ModelResponses, ModelError> {
    economy.validate()?;
    shock.validate()?;
    let (eta_eff, eta_pop) = weighted_elasticities(&economy.types)?;
    responses_from_parameters(economy.phi()?, eta_eff, eta_pop, shock.c_ratio)
}

/// Derivatives of a type's flow probabilities with respect to the wage ratio
/// w_r1 / w_r0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeFlows {
    /// Pr(employed in the region at base).
    pub p_employed_r0: f64,
    /// d Pr(employed anywhere at end | employed in r at base).
    pub d_employed_given_r0: f64,
    /// d Pr(employed in r at end | not employed in r at base).
    pub d_enter_given_not_r0: f64,
    /// d Pr(employed in another region at end | employed in r at base).
    pub d_relocate_given_r0: f64,
}

impl Default for TypeFlows {
    fn default() -> Self {
        Self {
            p_employed_r0: 1.0,
            d_employed_given_r0: 0.0,
            d_enter_given_not_r0: 0.0,
            d_relocate_given_r0: 0.0,
        }
    }
}

/// Displacement, crowding-out and relocation elasticities of one type.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElasticityComponents {
    pub displacement: f64,
    pub crowding_out: f64,
    pub relocation: f64,
}

impl ElasticityComponents {
    /// The type's supply elasticity: displacement + crowding-out − relocation.
    pub fn eta(&self) -> f64 {
        self.displacement + self.crowding_out - self.relocation
    }
}

pub fn elasticity_components(flows: &TypeFlows) -> Result<ElasticityComponents, ModelError> {
    let p0 = flows.p_employed_r0;
    for v in [
        p0,
        flows.d_employed_given_r0,
        flows.d_enter_given_not_r0,
        flows.d_relocate_given_r0,
    ] {
        if !v.is_finite() {
            return Err(invalid("flows", v, "must be finite"));
        }
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(invalid("p_employed_r0", p0, "must be a probability"));
    }
    if p0 == 0.0 {
        return Err(ModelError::UndefinedElasticity);
    }
    Ok(ElasticityComponents {
        displacement: flows.d_employed_given_r0,
        crowding_out: flows.d_enter_given_not_r0 * (1.0 - p0) / p0,
        relocation: flows.d_relocate_given_r0,
    })
}
