//! Wild cluster bootstrap with Rademacher weights: percentile and symmetric
//! intervals from unrestricted residuals, plus test-inversion intervals from
//! restricted residuals.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use super::restricted::RestrictedTest;
use super::linear::{cluster_index, fit, result_from_fit, BootstrapSummary, EstimationSpec, Estimator, RegressionResult};
use super::EstimationError;
use crate::rng::{substream, Domain};

/// Largest tolerated share of failed replications.
const MAX_FAILURE_SHARE: f64 = 0.05;

/// Bootstrap settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub reps: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { reps: 500, seed: 0 }
    }
}

pub fn wild_cluster_bootstrap(
    spec: &EstimationSpec,
    estimator: Estimator,
    reps: usize,
    seed: u64,
) -> Result<BootstrapSummary, EstimationError> {
    let f = fit(spec, estimator)?;
    bootstrap_fit(&f, spec, reps, seed)
}

/// Fits and, when `config` is given, attaches bootstrap inference.
pub fn estimate(
    spec: &EstimationSpec,
    estimator: Estimator,
    config: Option<BootstrapConfig>,
) -> Result<RegressionResult, EstimationError> {
    let f = fit(spec, estimator)?;
    let mut result = result_from_fit(&f, spec);
    if let Some(cfg) = config {
        if cfg.reps > 0 {
            result.bootstrap = Some(bootstrap_fit(&f, spec, cfg.reps, cfg.seed)?);
        }
    }
    Ok(result)
}

fn bootstrap_fit(
    f: &super::linear::Fit,
    spec: &EstimationSpec,
    reps: usize,
    seed: u64,
) -> Result<BootstrapSummary, EstimationError> {
    if reps < 2 {
        return Err(EstimationError::Bootstrap(format!("need at least 2 replications, got {reps}")));
    }
    let (clusters, g) = cluster_index(spec);
    if spec.cluster_ids.is_empty() || g < 2 {
        return Err(EstimationError::TooFewClusters(if spec.cluster_ids.is_empty() { 0 } else { g }));
    }
    let fitted = &f.x * &f.beta;
    let signs: Vec<Vec<f64>> = (0..reps)
        .map(|rep| {
            let mut rng = substream(seed, Domain::Bootstrap, rep as u64);
            (0..g).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
        })
        .collect();
    let draws: Vec<Option<DVector<f64>>> = signs
        .par_iter()
        .map(|signs| {
            let y_star = DVector::from_iterator(
                fitted.len(),
                fitted.iter().zip(f.residuals.iter()).zip(&clusters).map(|((yh, u), &c)| yh + signs[c] * u),
            );
            let b = f.solver.apply(&y_star);
            b.iter().all(|v| v.is_finite()).then_some(b)
        })
        .collect();
    let ok: Vec<DVector<f64>> = draws.into_iter().flatten().collect();
    let failed = reps - ok.len();
    if failed as f64 > MAX_FAILURE_SHARE * reps as f64 || ok.len() < 2 {
        return Err(EstimationError::Bootstrap(format!("{failed} of {reps} replications failed")));
    }
    let k = f.beta.len();
    let mut se = DVector::zeros(k);
    let mut lo = DVector::zeros(k);
    let mut hi = DVector::zeros(k);
    let mut slo = DVector::zeros(k);
    let mut shi = DVector::zeros(k);
    for j in 0..k {
        let mut v: Vec<f64> = ok.iter().map(|b| b[j]).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        se[j] = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
        v.sort_by(f64::total_cmp);
        lo[j] = quantile_sorted(&v, 0.025);
        hi[j] = quantile_sorted(&v, 0.975);
        let mut dev: Vec<f64> = v.iter().map(|x| (x - f.beta[j]).abs()).collect();
        dev.sort_by(f64::total_cmp);
        let half = quantile_sorted(&dev, 0.95);
        slo[j] = f.beta[j] - half;
        shi[j] = f.beta[j] + half;
    }
    let restricted_ci = (0..k)
        .into_par_iter()
        .map(|j| RestrictedTest::new(f, spec, j, &clusters, g, &signs).map(|t| t.confidence_set(0.05)))
        .collect();
    Ok(BootstrapSummary {
        reps,
        failed,
        se,
        ci_low: lo,
        ci_high: hi,
        sym_ci_low: slo,
        sym_ci_high: shi,
        restricted_ci,
    })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    assert!(!v.is_empty());
    let h = (v.len() - 1) as f64 * p;
    let i = h.floor() as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[i] + (h - i as f64) * (v[i + 1] - v[i])
}
