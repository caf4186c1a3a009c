//! Estimation core: weighted least squares, weighted 2SLS with first-stage
//! diagnostics, wild cluster bootstrap, probit and Gaussian utilities.

mod bootstrap;
mod gaussian;
mod linear;
mod probit;
mod restricted;

use thiserror::Error;

pub use bootstrap::{estimate, quantile_sorted, wild_cluster_bootstrap, BootstrapConfig};
pub use gaussian::{
    gaussian_mills, norm_cdf, norm_inv_cdf, norm_log_cdf, norm_pdf, upper_truncated_mean, Mills,
};
pub use linear::{
    tsls, wls, BootstrapSummary, Column, EstimationSpec, Estimator, InstrumentStrength,
    RegressionResult, INTERCEPT,
};
pub use probit::{probit_mle, ProbitResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("empty estimation sample")]
    EmptySample,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("weights must be non-negative, finite and sum to a positive value")]
    InvalidWeights,
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("singular design: column `{column}` is collinear with earlier columns")]
    SingularDesign { column: String },
    #[error("under-identified: {instruments} excluded instruments for {endogenous} endogenous regressors")]
    UnderIdentified { instruments: usize, endogenous: usize },
    #[error("clustered inference needs at least 2 clusters, found {0}")]
    TooFewClusters(usize),
    #[error("bootstrap failed: {0}")]
    Bootstrap(String),
    #[error("perfect separation: {0}")]
    Separation(String),
    #[error("probit did not converge:\n{}", trace.join("\n"))]
    NoConvergence { trace: Vec<String> },
}
