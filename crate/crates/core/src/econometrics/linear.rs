//! Weighted least squares and weighted two-stage least squares.
//!
//! Both estimators reduce to a fixed linear map `A` (k × n) with β = A·y.
//! The map is built from a Householder QR of the weighted, column-equilibrated
//! design, so the normal equations are never formed. Keeping `A` around makes
//! bootstrap re-estimation on perturbed outcomes a matrix-vector product.

use nalgebra::{DMatrix, DVector};

use super::EstimationError;

/// A named data column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }
}

/// Inputs of one regression.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationSpec {
    pub outcome: Vec<f64>,
    /// Regressors, each flagged endogenous or exogenous.
    pub regressors: Vec<(Column, bool)>,
    /// Excluded instruments.
    pub instruments: Vec<Column>,
    pub weights: Vec<f64>,
    pub cluster_ids: Vec<u64>,
    pub include_intercept: bool,
}

impl EstimationSpec {
    /// Unit weights, no clusters, intercept included.
    pub fn new(outcome: Vec<f64>) -> Self {
        let n = outcome.len();
        Self {
            outcome,
            regressors: Vec::new(),
            instruments: Vec::new(),
            weights: vec![1.0; n],
            cluster_ids: Vec::new(),
            include_intercept: true,
        }
    }

    pub fn exog(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.regressors.push((Column::new(name, values), false));
        self
    }

    pub fn endog(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.regressors.push((Column::new(name, values), true));
        self
    }

    pub fn instrument(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.instruments.push(Column::new(name, values));
        self
    }

    pub fn weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn clusters(mut self, ids: Vec<u64>) -> Self {
        self.cluster_ids = ids;
        self
    }

    pub fn intercept(mut self, include: bool) -> Self {
        self.include_intercept = include;
        self
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    /// Coefficient names in output order (intercept first when included).
    pub fn coefficient_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.regressors.len() + 1);
        if self.include_intercept {
            names.push(INTERCEPT.to_string());
        }
        names.extend(self.regressors.iter().map(|(c, _)| c.name.clone()));
        names
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        let n = self.n();
        if n == 0 {
            return Err(EstimationError::EmptySample);
        }
        let check = |name: &str, len: usize| {
            if len != n {
                Err(EstimationError::Dimension(format!("{name} has {len} rows, outcome has {n}")))
            } else {
                Ok(())
            }
        };
        check("weights", self.weights.len())?;
        if !self.cluster_ids.is_empty() {
            check("cluster_ids", self.cluster_ids.len())?;
        }
        for (c, _) in &self.regressors {
            check(&c.name, c.values.len())?;
        }
        for c in &self.instruments {
            check(&c.name, c.values.len())?;
        }
        if self.regressors.is_empty() && !self.include_intercept {
            return Err(EstimationError::Dimension("no regressors".into()));
        }
        let mut total = 0.0;
        for &w in &self.weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(EstimationError::InvalidWeights);
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(EstimationError::InvalidWeights);
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.outcome) {
            return Err(EstimationError::NonFinite("outcome".into()));
        }
        for (c, _) in &self.regressors {
            if !finite(&c.values) {
                return Err(EstimationError::NonFinite(c.name.clone()));
            }
        }
        for c in &self.instruments {
            if !finite(&c.values) {
                return Err(EstimationError::NonFinite(c.name.clone()));
            }
        }
        Ok(())
    }

    pub(crate) fn design(&self) -> (DMatrix<f64>, Vec<String>) {
        let n = self.n();
        let names = self.coefficient_names();
        let mut x = DMatrix::zeros(n, names.len());
        let mut j = 0;
        if self.include_intercept {
            x.column_mut(0).fill(1.0);
            j = 1;
        }
        for (c, _) in &self.regressors {
            x.column_mut(j).copy_from_slice(&c.values);
            j += 1;
        }
        (x, names)
    }

    pub(crate) fn n_positive_weights(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }
}

pub const INTERCEPT: &str = "const";

/// Which linear estimator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Wls,
    Tsls,
}

/// First-stage strength classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstrumentStrength {
    /// F ≥ 10.
    Strong,
    /// 1 ≤ F < 10.
    Weak,
    /// F < 1.
    VeryWeak,
}

impl InstrumentStrength {
    pub fn from_f(f: f64) -> Self {
        if f >= 10.0 {
            Self::Strong
        } else if f >= 1.0 {
            Self::Weak
        } else {
            Self::VeryWeak
        }
    }
}

/// Bootstrap inference attached to a regression.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub reps: usize,
    pub failed: usize,
    pub se: DVector<f64>,
    /// 2.5th percentile of the replicates.
    pub ci_low: DVector<f64>,
    /// 97.5th percentile of the replicates.
    pub ci_high: DVector<f64>,
    /// β̂ ∓ the 95th percentile of |β* − β̂|.
    pub sym_ci_low: DVector<f64>,
    pub sym_ci_high: DVector<f64>,
    /// Bounds of the set of values not rejected at 5% by the restricted
    /// (null-imposed) bootstrap t test; `None` for the intercept.
    pub restricted_ci: Vec<Option<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub estimator: Estimator,
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    /// Cluster-robust sandwich covariance of the point estimate (diagnostic only).
    pub covariance: DMatrix<f64>,
    pub n_obs: usize,
    pub n_clusters: usize,
    /// Smallest first-stage F across endogenous regressors (2SLS only).
    pub first_stage_f: Option<f64>,
    pub instrument_strength: Option<InstrumentStrength>,
    pub bootstrap: Option<BootstrapSummary>,
}

impl RegressionResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Coefficient by name; panics on an unknown name.
    pub fn coef(&self, name: &str) -> f64 {
        let i = self.index(name).unwrap_or_else(|| panic!("no coefficient named {name}"));
        self.coefficients[i]
    }

    pub fn analytic_se(&self, name: &str) -> f64 {
        let i = self.index(name).unwrap_or_else(|| panic!("no coefficient named {name}"));
        self.covariance[(i, i)].max(0.0).sqrt()
    }

    /// Bootstrap SE when available, analytic otherwise.
    pub fn se(&self, name: &str) -> f64 {
        let i = self.index(name).unwrap_or_else(|| panic!("no coefficient named {name}"));
        match &self.bootstrap {
            Some(b) => b.se[i],
            None => self.covariance[(i, i)].max(0.0).sqrt(),
        }
    }

    /// Restricted-bootstrap CI when bootstrapped (percentile for the
    /// intercept), normal-approximation CI otherwise.
    pub fn ci(&self, name: &str) -> (f64, f64) {
        let i = self.index(name).unwrap_or_else(|| panic!("no coefficient named {name}"));
        match &self.bootstrap {
            Some(b) => b.restricted_ci[i].unwrap_or((b.ci_low[i], b.ci_high[i])),
            None => {
                let se = self.covariance[(i, i)].max(0.0).sqrt();
                let b = self.coefficients[i];
                (b - 1.959_963_984_540_054 * se, b + 1.959_963_984_540_054 * se)
            }
        }
    }

    /// Percentile CI of the unrestricted bootstrap.
    pub fn percentile_ci(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.index(name)?;
        self.bootstrap.as_ref().map(|b| (b.ci_low[i], b.ci_high[i]))
    }

    /// β̂ ∓ the 95th percentile of |β* − β̂|.
    pub fn symmetric_ci(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.index(name)?;
        self.bootstrap.as_ref().map(|b| (b.sym_ci_low[i], b.sym_ci_high[i]))
    }

    pub fn weak_instruments(&self) -> bool {
        matches!(
            self.instrument_strength,
            Some(InstrumentStrength::Weak | InstrumentStrength::VeryWeak)
        )
    }
}

/// β = map · y for a fixed design.
#[derive(Debug, Clone)]
pub(crate) struct LinearMap {
    map: DMatrix<f64>,
}

impl LinearMap {
    /// Builds the weighted least-squares map of `x` under weights `w`.
    fn weighted(x: &DMatrix<f64>, w: &[f64], names: &[String]) -> Result<Self, EstimationError> {
        let (n, k) = x.shape();
        if n < k {
            return Err(EstimationError::Dimension(format!("{n} observations for {k} coefficients")));
        }
        let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        let mut xw = x.clone();
        let mut scale = vec![0.0; k];
        for j in 0..k {
            let mut col = xw.column_mut(j);
            for (i, v) in col.iter_mut().enumerate() {
                *v *= sw[i];
            }
            let norm = col.norm();
            if norm == 0.0 {
                return Err(EstimationError::SingularDesign { column: names[j].clone() });
            }
            col /= norm;
            scale[j] = norm;
        }
        let qr = xw.qr();
        let r = qr.r();
        for j in 0..k {
            if r[(j, j)].abs() < RANK_TOL {
                return Err(EstimationError::SingularDesign { column: names[j].clone() });
            }
        }
        let qt = qr.q().transpose();
        let mut map = r
            .solve_upper_triangular(&qt)
            .ok_or_else(|| EstimationError::SingularDesign { column: names[k - 1].clone() })?;
        for j in 0..k {
            map.row_mut(j).scale_mut(1.0 / scale[j]);
        }
        for i in 0..n {
            map.column_mut(i).scale_mut(sw[i]);
        }
        Ok(Self { map })
    }

    pub(crate) fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.map * y
    }

    pub(crate) fn map(&self) -> &DMatrix<f64> {
        &self.map
    }
}

/// Columns whose weighted residual norm after projection on earlier columns
/// falls below this (relative to their own norm) are treated as collinear.
const RANK_TOL: f64 = 1e-10;

/// A fitted linear estimator, retaining what the bootstrap needs.
#[derive(Debug, Clone)]
pub(crate) struct Fit {
    pub estimator: Estimator,
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub solver: LinearMap,
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub first_stage_f: Option<f64>,
}

pub(crate) fn fit(spec: &EstimationSpec, estimator: Estimator) -> Result<Fit, EstimationError> {
    spec.validate()?;
    let (x, names) = spec.design();
    let y = DVector::from_column_slice(&spec.outcome);
    let (solver, first_stage_f) = match estimator {
        Estimator::Wls => (LinearMap::weighted(&x, &spec.weights, &names)?, None),
        Estimator::Tsls => tsls_map(spec, &x, &names)?,
    };
    let beta = solver.apply(&y);
    let residuals = &y - &x * &beta;
    Ok(Fit { estimator, names, x, solver, beta, residuals, first_stage_f })
}

fn tsls_map(
    spec: &EstimationSpec,
    x: &DMatrix<f64>,
    names: &[String],
) -> Result<(LinearMap, Option<f64>), EstimationError> {
    let offset = usize::from(spec.include_intercept);
    let endog: Vec<usize> = spec
        .regressors
        .iter()
        .enumerate()
        .filter(|(_, (_, e))| *e)
        .map(|(j, _)| j + offset)
        .collect();
    if spec.instruments.len() < endog.len() {
        return Err(EstimationError::UnderIdentified {
            instruments: spec.instruments.len(),
            endogenous: endog.len(),
        });
    }
    if endog.is_empty() {
        return Ok((LinearMap::weighted(x, &spec.weights, names)?, None));
    }
    let n = spec.n();
    let exog: Vec<usize> = (0..x.ncols()).filter(|j| !endog.contains(j)).collect();
    let kz = exog.len() + spec.instruments.len();
    let mut z = DMatrix::zeros(n, kz);
    let mut z_names = Vec::with_capacity(kz);
    for (c, &j) in exog.iter().enumerate() {
        z.set_column(c, &x.column(j));
        z_names.push(names[j].clone());
    }
    for (c, inst) in spec.instruments.iter().enumerate() {
        z.column_mut(exog.len() + c).copy_from_slice(&inst.values);
        z_names.push(inst.name.clone());
    }
    let z_map = LinearMap::weighted(&z, &spec.weights, &z_names)?;
    let restricted = if exog.is_empty() {
        None
    } else {
        let z0 = z.columns(0, exog.len()).into_owned();
        Some((LinearMap::weighted(&z0, &spec.weights, &z_names[..exog.len()])?, z0))
    };

    let mut x_hat = x.clone();
    let mut min_f = f64::INFINITY;
    let n_pos = spec.n_positive_weights();
    for &j in &endog {
        let xj = x.column(j).into_owned();
        let fitted = &z * z_map.apply(&xj);
        let rss_u = weighted_rss(&xj, &fitted, &spec.weights);
        let rss_r = match &restricted {
            Some((m0, z0)) => weighted_rss(&xj, &(z0 * m0.apply(&xj)), &spec.weights),
            None => spec.weights.iter().zip(xj.iter()).map(|(w, v)| w * v * v).sum(),
        };
        let q = spec.instruments.len() as f64;
        let dof = n_pos as f64 - kz as f64;
        let f = if rss_u > 0.0 && dof > 0.0 {
            ((rss_r - rss_u) / q) / (rss_u / dof)
        } else {
            f64::INFINITY
        };
        min_f = min_f.min(f);
        x_hat.set_column(j, &fitted);
    }
    Ok((LinearMap::weighted(&x_hat, &spec.weights, names)?, Some(min_f)))
}

fn weighted_rss(y: &DVector<f64>, fitted: &DVector<f64>, w: &[f64]) -> f64 {
    y.iter().zip(fitted.iter()).zip(w).map(|((a, b), w)| w * (a - b) * (a - b)).sum()
}

/// Cluster index per observation, numbered by first appearance.
pub(crate) fn cluster_index(spec: &EstimationSpec) -> (Vec<usize>, usize) {
    if spec.cluster_ids.is_empty() {
        let n = spec.n();
        return ((0..n).collect(), n);
    }
    let mut seen = std::collections::HashMap::new();
    let idx = spec
        .cluster_ids
        .iter()
        .map(|id| {
            let next = seen.len();
            *seen.entry(*id).or_insert(next)
        })
        .collect();
    (idx, seen.len())
}

fn sandwich(fit: &Fit, clusters: &[usize], g: usize) -> DMatrix<f64> {
    let k = fit.beta.len();
    let mut scores = DMatrix::zeros(k, g);
    let map = fit.solver.map();
    for (i, &c) in clusters.iter().enumerate() {
        let u = fit.residuals[i];
        if u != 0.0 {
            let mut col = scores.column_mut(c);
            col.axpy(u, &map.column(i), 1.0);
        }
    }
    let adj = if g > 1 { g as f64 / (g as f64 - 1.0) } else { 1.0 };
    (&scores * scores.transpose()) * adj
}

pub(crate) fn result_from_fit(fit: &Fit, spec: &EstimationSpec) -> RegressionResult {
    let (clusters, g) = cluster_index(spec);
    RegressionResult {
        estimator: fit.estimator,
        names: fit.names.clone(),
        coefficients: fit.beta.clone(),
        covariance: sandwich(fit, &clusters, g),
        n_obs: spec.n_positive_weights(),
        n_clusters: if spec.cluster_ids.is_empty() { 0 } else { g },
        first_stage_f: fit.first_stage_f,
        instrument_strength: fit.first_stage_f.map(InstrumentStrength::from_f),
        bootstrap: None,
    }
}

/// Weighted least squares.
pub fn wls(spec: &EstimationSpec) -> Result<RegressionResult, EstimationError> {
    let f = fit(spec, Estimator::Wls)?;
    Ok(result_from_fit(&f, spec))
}

/// Weighted two-stage least squares; weights enter both stages.
pub fn tsls(spec: &EstimationSpec) -> Result<RegressionResult, EstimationError> {
    let f = fit(spec, Estimator::Tsls)?;
    Ok(result_from_fit(&f, spec))
}
