use statrs::distribution::{ContinuousCDF, Normal};
use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard-normal quantities at one point, with the inverse Mills ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mills {
    pub pdf: f64,
    pub cdf: f64,
    pub log_cdf: f64,
    /// λ(π) = φ(π)/Φ(π)
    pub lambda: f64,
    /// λ′(π) = −λ(π)(π + λ(π))
    pub dlambda: f64,
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn norm_log_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// log Φ(x), accurate in the lower tail where Φ underflows relative precision.
pub fn norm_log_cdf(x: f64) -> f64 {
    if x > -30.0 {
        (0.5 * erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        // Asymptotic series for the far tail.
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        norm_log_pdf(x) - (-x).ln() + series.ln()
    }
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn norm_inv_cdf(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn gaussian_mills(pi: f64) -> Mills {
    let pdf = norm_pdf(pi);
    let log_cdf = norm_log_cdf(pi);
    let lambda = (norm_log_pdf(pi) - log_cdf).exp();
    Mills {
        pdf,
        cdf: log_cdf.exp(),
        log_cdf,
        lambda,
        dlambda: -lambda * (pi + lambda),
    }
}

/// Mean of a normal(mu, sigma) truncated from below at `limit`.
pub fn upper_truncated_mean(mu: f64, sigma: f64, limit: f64) -> f64 {
    let z = (limit - mu) / sigma;
    // φ(z)/(1−Φ(z)) is the Mills ratio evaluated at −z.
    mu + sigma * gaussian_mills(-z).lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mills_at_zero() {
        let m = gaussian_mills(0.0);
        assert!((m.cdf - 0.5).abs() < 1e-15);
        assert!((m.lambda - 2.0 * norm_pdf(0.0)).abs() < 1e-14);
        assert!((m.lambda - 0.797_884_560_802_865_4).abs() < 1e-12);
    }

    #[test]
    fn lower_tail_is_finite_and_ordered() {
        for &x in &[-8.0, -12.0, -25.0, -35.0, -60.0] {
            let m = gaussian_mills(x);
            assert!(m.lambda.is_finite() && m.lambda > 0.0, "x={x}");
            assert!(m.dlambda < 0.0, "x={x}");
            assert!(m.lambda + x > 0.0, "x={x}");
        }
        // Φ(−8) = 6.220960574271785e-16
        let m = gaussian_mills(-8.0);
        assert!((m.cdf / 6.220_960_574_271_785e-16 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_cdf_branches_agree_near_switch() {
        let x = -30.0;
        let direct = (0.5 * erfc(-x * FRAC_1_SQRT_2)).ln();
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        let asym = norm_log_pdf(x) - (-x).ln() + series.ln();
        assert!((direct - asym).abs() < 1e-9);
    }

    #[test]
    fn truncated_mean_above_limit() {
        let m = upper_truncated_mean(4.0, 0.3, 4.5);
        assert!(m > 4.5);
    }
}
