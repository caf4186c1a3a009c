//! Confidence sets from inverting a restricted wild cluster bootstrap test.
//!
//! For a hypothesised value β0 of one coefficient the model is re-estimated
//! with that coefficient fixed, outcomes are rebuilt from the restricted fit
//! with sign-flipped restricted residuals, and the observed cluster-robust t
//! statistic is compared with its bootstrap distribution. Restricted residuals
//! are affine in β0, so each replication reduces to five scalars and the
//! p-value at any β0 costs O(reps).

use nalgebra::{DMatrix, DVector};

use super::linear::{fit, EstimationSpec, Fit};

/// Per-replication pieces of t*(β0) = (na − β0·nb) / √(adj·|p − β0·q|²).
struct Draw {
    na: f64,
    nb: f64,
    pp: f64,
    pq: f64,
    qq: f64,
}

pub(crate) struct RestrictedTest {
    beta: f64,
    se: f64,
    adj: f64,
    draws: Vec<Draw>,
}

impl RestrictedTest {
    /// Sets up the test for coefficient `j` of a fitted model. `None` when the
    /// coefficient is the intercept or the restricted model cannot be fitted.
    pub(crate) fn new(
        f: &Fit,
        spec: &EstimationSpec,
        j: usize,
        clusters: &[usize],
        g: usize,
        signs: &[Vec<f64>],
    ) -> Option<Self> {
        let offset = usize::from(spec.include_intercept);
        if j < offset {
            return None;
        }
        let y = DVector::from_column_slice(&spec.outcome);
        let xj = f.x.column(j).into_owned();
        let mut reduced = spec.clone();
        reduced.regressors.remove(j - offset);
        let (ua, ub) = if reduced.regressors.is_empty() && !reduced.include_intercept {
            (y, xj)
        } else {
            let r = fit(&reduced, f.estimator).ok()?;
            let ub = &xj - &r.x * r.solver.apply(&xj);
            (r.residuals, ub)
        };

        let map = f.solver.map();
        let k = f.beta.len();
        let aj = map.row(j);
        // S_g = Σ_{i∈g} A_ji u_i, R_g = Σ_{i∈g} A_·i u_i, Q_g = Σ_{i∈g} A_ji X_i.
        let mut sa = vec![0.0; g];
        let mut sb = vec![0.0; g];
        let mut ra = DMatrix::zeros(k, g);
        let mut rb = DMatrix::zeros(k, g);
        let mut q = DMatrix::zeros(k, g);
        for (i, &c) in clusters.iter().enumerate() {
            let a = aj[i];
            sa[c] += a * ua[i];
            sb[c] += a * ub[i];
            ra.column_mut(c).axpy(ua[i], &map.column(i), 1.0);
            rb.column_mut(c).axpy(ub[i], &map.column(i), 1.0);
            if a != 0.0 {
                q.column_mut(c).axpy(a, &f.x.row(i).transpose(), 1.0);
            }
        }
        // Score map D = diag(S) − QᵀR.
        let qt = q.transpose();
        let mut da = -(&qt * &ra);
        let mut db = -(&qt * &rb);
        for c in 0..g {
            da[(c, c)] += sa[c];
            db[(c, c)] += sb[c];
        }
        let (sa, sb) = (DVector::from_vec(sa), DVector::from_vec(sb));
        let draws = signs
            .iter()
            .map(|v| {
                let v = DVector::from_column_slice(v);
                let p = &da * &v;
                let qv = &db * &v;
                Draw { na: sa.dot(&v), nb: sb.dot(&v), pp: p.dot(&p), pq: p.dot(&qv), qq: qv.dot(&qv) }
            })
            .collect();
        let adj = if g > 1 { g as f64 / (g as f64 - 1.0) } else { 1.0 };
        let score_sq: f64 = {
            let mut s = vec![0.0; g];
            for (i, &c) in clusters.iter().enumerate() {
                s[c] += aj[i] * f.residuals[i];
            }
            s.iter().map(|v| v * v).sum()
        };
        Some(Self { beta: f.beta[j], se: (adj * score_sq).sqrt(), adj, draws })
    }

    /// Equal-tailed bootstrap p-value of H0: β = b0.
    pub(crate) fn p_value(&self, b0: f64) -> f64 {
        let t = (self.beta - b0) / self.se;
        let (mut below, mut above) = (0usize, 0usize);
        for d in &self.draws {
            let var = self.adj * (d.pp - 2.0 * b0 * d.pq + b0 * b0 * d.qq).max(0.0);
            let num = d.na - b0 * d.nb;
            let ts = if var > 0.0 { num / var.sqrt() } else { num.signum() * f64::INFINITY };
            if ts <= t {
                below += 1;
            }
            if ts >= t {
                above += 1;
            }
        }
        (2.0 * below.min(above) as f64 / self.draws.len() as f64).min(1.0)
    }

    /// Bounds of {b0 : p(b0) > alpha}, searched outward from the estimate.
    pub(crate) fn confidence_set(&self, alpha: f64) -> (f64, f64) {
        if !(self.se > 0.0 && self.se.is_finite()) {
            return (self.beta, self.beta);
        }
        let bound = |dir: f64| -> f64 {
            let mut inside = self.beta;
            let mut step = self.se;
            let mut outside = None;
            for _ in 0..64 {
                let b = self.beta + dir * step;
                if self.p_value(b) <= alpha {
                    outside = Some(b);
                    break;
                }
                inside = b;
                step *= 2.0;
            }
            let Some(mut out) = outside else { return dir * f64::INFINITY };
            for _ in 0..100 {
                let mid = 0.5 * (inside + out);
                if (out - inside).abs() <= 1e-10 * self.se {
                    break;
                }
                if self.p_value(mid) > alpha {
                    inside = mid;
                } else {
                    out = mid;
                }
            }
            0.5 * (inside + out)
        };
        (bound(-1.0), bound(1.0))
    }
}
