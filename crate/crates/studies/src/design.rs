//! Shared regression design and report types.

use flowdecomp_core::econometrics::{estimate, EstimationSpec, Estimator, RegressionResult};

use crate::data::{StudyData, StudyOptions, Window};
use crate::StudyError;

/// Name of the shock coefficient in every study regression.
pub const SHOCK: &str = "shock";

/// The sign with which a component enters its total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub sign: Option<Sign>,
    pub result: RegressionResult,
}

impl Component {
    pub fn coef(&self) -> f64 {
        self.result.coef(SHOCK)
    }

    pub fn se(&self) -> f64 {
        self.result.se(SHOCK)
    }

    pub fn ci(&self) -> (f64, f64) {
        self.result.ci(SHOCK)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub study: String,
    pub total: Component,
    /// Components whose signed sum reproduces the total.
    pub components: Vec<Component>,
    /// Related estimates outside the additive decomposition.
    pub extras: Vec<Component>,
    /// Signed sum of components minus the total.
    pub additivity_residual: f64,
    /// Municipalities dropped, with the reason.
    pub excluded: Vec<(u32, &'static str)>,
}

impl DecompositionReport {
    pub fn new(study: &str, total: Component, components: Vec<Component>, excluded: Vec<(u32, &'static str)>) -> Self {
        let signed: f64 = components.iter().map(|c| c.sign.map_or(0.0, Sign::factor) * c.coef()).sum();
        Self {
            study: study.to_string(),
            additivity_residual: signed - total.coef(),
            total,
            components,
            extras: Vec::new(),
            excluded,
        }
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        std::iter::once(&self.total).chain(&self.components).chain(&self.extras).find(|c| c.name == name)
    }
}

/// Municipality-level design: shock regressor, instruments, weights and
/// district clusters in a fixed row order.
#[derive(Debug, Clone, PartialEq)]
pub struct MuniDesign {
    pub munis: Vec<u32>,
    pub shock: Vec<f64>,
    pub instruments: [Vec<f64>; 3],
    pub weights: Vec<f64>,
    pub clusters: Vec<u64>,
}

impl MuniDesign {
    /// Rows for (muni, weight) pairs; `shock_offset` selects ΔI measured
    /// `shock_offset` years after the base year.
    pub fn new(data: &StudyData, rows: &[(u32, f64)], shock_offset: usize) -> Self {
        let mut d = MuniDesign {
            munis: Vec::with_capacity(rows.len()),
            shock: Vec::with_capacity(rows.len()),
            instruments: Default::default(),
            weights: Vec::with_capacity(rows.len()),
            clusters: Vec::with_capacity(rows.len()),
        };
        for &(m, w) in rows {
            let z = data.instruments(m);
            d.munis.push(m);
            d.shock.push(data.shocks.get(&m).map_or(0.0, |s| s.delta(shock_offset)));
            for j in 0..3 {
                d.instruments[j].push(z[j]);
            }
            d.weights.push(w);
            d.clusters.push(data.district(m));
        }
        d
    }

    pub fn for_window(data: &StudyData, rows: &[(u32, f64)], window: &Window) -> Self {
        Self::new(data, rows, (window.shock_year - data.base_year).clamp(0, 2) as usize)
    }

    pub fn len(&self) -> usize {
        self.munis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.munis.is_empty()
    }

    pub fn spec(&self, outcome: Vec<f64>) -> EstimationSpec {
        with_instruments(
            EstimationSpec::new(outcome).endog(SHOCK, self.shock.clone()).weights(self.weights.clone()),
            &self.instruments,
        )
        .clusters(self.clusters.clone())
    }
}

pub(crate) fn with_instruments(spec: EstimationSpec, z: &[Vec<f64>; 3]) -> EstimationSpec {
    spec.instrument("border", z[0].clone())
        .instrument("border_dist", z[1].clone())
        .instrument("border_dist_sq", z[2].clone())
}

pub(crate) fn run(study: &str, spec: &EstimationSpec, opts: &StudyOptions) -> Result<RegressionResult, StudyError> {
    estimate(spec, Estimator::Tsls, opts.bootstrap)
        .map_err(|source| StudyError::Estimation { study: study.to_string(), source })
}

pub(crate) fn component(
    study: &str,
    name: &str,
    sign: Option<Sign>,
    spec: &EstimationSpec,
    opts: &StudyOptions,
) -> Result<Component, StudyError> {
    Ok(Component { name: name.to_string(), sign, result: run(&format!("{study}: {name}"), spec, opts)? })
}
