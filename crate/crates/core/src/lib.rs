//! Closed-form canonical model, estimation core and structural recovery for
//! decomposing regional labor-supply shocks into worker-level effects.

pub mod canonical_model;
pub mod econometrics;
pub mod rng;
pub mod structural;
