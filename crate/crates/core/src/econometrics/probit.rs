//! Weighted probit by Newton-Raphson with step halving.

use nalgebra::{DMatrix, DVector};

use super::gaussian::{gaussian_mills, norm_log_cdf};
use super::EstimationError;

const MAX_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 60;
/// Linear indices beyond this magnitude mean fitted probabilities of 0 or 1.
const SEPARATION_INDEX: f64 = 30.0;
/// Mean log-likelihood this close to zero means the data are separated.
const PERFECT_FIT: f64 = 1e-9;
const MAX_COEF: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbitResult {
    pub coefficients: DVector<f64>,
    /// Inverse of the observed information.
    pub covariance: DMatrix<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
}

impl ProbitResult {
    pub fn se(&self, j: usize) -> f64 {
        self.covariance[(j, j)].sqrt()
    }
}

fn log_lik(y: &[f64], w: &[f64], xb: &DVector<f64>) -> f64 {
    y.iter()
        .zip(w)
        .zip(xb.iter())
        .map(|((&yi, &wi), &v)| wi * norm_log_cdf(if yi > 0.5 { v } else { -v }))
        .sum()
}

/// Maximum-likelihood probit of binary `y` on the columns of `x`.
///
/// Convergence is declared when the max-norm of the gradient of the
/// weight-normalized log-likelihood drops below 1e-10, or when the predicted
/// Newton gain falls below what the log-likelihood can resolve in f64; in the
/// latter case the last Newton step is applied unchecked.
pub fn probit_mle(y: &[f64], x: &DMatrix<f64>, weights: &[f64]) -> Result<ProbitResult, EstimationError> {
    let (n, k) = x.shape();
    if y.len() != n || weights.len() != n {
        return Err(EstimationError::Dimension(format!(
            "probit: y has {}, weights {}, design {} rows",
            y.len(),
            weights.len(),
            n
        )));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(EstimationError::Dimension("probit outcome must be 0/1".into()));
    }
    if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(EstimationError::InvalidWeights);
    }
    let total_w: f64 = weights.iter().sum();
    if total_w <= 0.0 {
        return Err(EstimationError::InvalidWeights);
    }
    let w: Vec<f64> = weights.iter().map(|v| v / total_w).collect();
    let ones: f64 = y.iter().zip(&w).map(|(a, b)| a * b).sum();
    if ones <= 0.0 || ones >= 1.0 {
        return Err(EstimationError::Separation("outcome does not vary".into()));
    }

    let mut beta = DVector::zeros(k);
    let mut xb = x * &beta;
    let mut ll = log_lik(y, &w, &xb);
    let mut trace = Vec::new();
    for iter in 0..MAX_ITER {
        let mut grad = DVector::zeros(k);
        let mut info = DMatrix::zeros(k, k);
        for i in 0..n {
            if w[i] == 0.0 {
                continue;
            }
            let q = if y[i] > 0.5 { 1.0 } else { -1.0 };
            let m = gaussian_mills(q * xb[i]);
            let lam = q * m.lambda;
            let curv = lam * (lam + xb[i]);
            let row = x.row(i);
            for a in 0..k {
                grad[a] += w[i] * lam * row[a];
                let s = w[i] * curv * row[a];
                for b in 0..=a {
                    info[(a, b)] += s * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                info[(b, a)] = info[(a, b)];
            }
        }
        let gmax = grad.amax();
        if -ll < PERFECT_FIT || beta.amax() > MAX_COEF {
            return Err(EstimationError::Separation(format!(
                "fitted probabilities approach 0/1 after {iter} iterations (loglik {ll:.3e})"
            )));
        }
        trace.push(format!("iter {iter}: loglik {ll:.12e}, |grad| {gmax:.3e}"));
        if gmax < GRAD_TOL {
            let cov = info
                .clone()
                .try_inverse()
                .ok_or_else(|| EstimationError::Separation("singular information matrix".into()))?
                / total_w;
            return Ok(ProbitResult { coefficients: beta, covariance: cov, log_likelihood: ll * total_w, iterations: iter });
        }
        let chol = info.clone().cholesky().ok_or_else(|| {
            EstimationError::SingularDesign { column: "probit information matrix".into() }
        })?;
        let step = chol.solve(&grad);
        let gain = 0.5 * grad.dot(&step);
        if gain < 4.0 * f64::EPSILON * ll.abs().max(1e-3) && gmax < 1e3 * GRAD_TOL {
            // Below log-likelihood resolution the gradient still is accurate,
            // so take the final Newton step without a line search.
            beta += &step;
            xb = x * &beta;
            ll = log_lik(y, &w, &xb);
            let cov = info
                .try_inverse()
                .ok_or_else(|| EstimationError::Separation("singular information matrix".into()))?
                / total_w;
            return Ok(ProbitResult { coefficients: beta, covariance: cov, log_likelihood: ll * total_w, iterations: iter });
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand = &beta + &step * t;
            let cand_xb = x * &cand;
            let cand_ll = log_lik(y, &w, &cand_xb);
            if cand_ll.is_finite() && cand_ll >= ll {
                beta = cand;
                xb = cand_xb;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if xb.iter().zip(&w).all(|(v, wi)| *wi == 0.0 || v.abs() > SEPARATION_INDEX) {
            return Err(EstimationError::Separation(format!(
                "all linear indices exceed {SEPARATION_INDEX} after {iter} iterations"
            )));
        }
        if !accepted {
            if gmax < 1e3 * GRAD_TOL {
                // Objective flat to machine precision; accept the current point.
                let cov = info
                    .try_inverse()
                    .ok_or_else(|| EstimationError::Separation("singular information matrix".into()))?
                    / total_w;
                return Ok(ProbitResult { coefficients: beta, covariance: cov, log_likelihood: ll * total_w, iterations: iter });
            }
            return Err(EstimationError::NoConvergence { trace });
        }
    }
    Err(EstimationError::NoConvergence { trace })
}
