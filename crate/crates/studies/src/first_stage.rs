use flowdecomp_core::econometrics::{estimate, EstimationSpec, Estimator, RegressionResult};

use crate::data::{StudyData, Window};
use crate::StudyError;

pub const DISTANCE: &str = "distance";
pub const DISTANCE_SQ: &str = "distance_sq";

#[derive(Debug, Clone, PartialEq)]
pub struct FirstStageFit {
    /// ΔI on [1, d/100, (d/100)²] over border municipalities.
    pub result: RegressionResult,
    pub n_border: usize,
}

/// Border-only regression of the measured shock on distance and its
/// square, weighted by base-year employment.
pub fn first_stage(data: &StudyData, window: &Window) -> Result<FirstStageFit, StudyError> {
    let mut y = Vec::new();
    let (mut d1, mut d2, mut w, mut cl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (&m, info) in data.munis.iter().filter(|(_, i)| i.is_border) {
        let (Some(s), Some(sh)) = (data.shock(m, window), data.shocks.get(&m)) else { continue };
        if sh.total_heads0 <= 0.0 {
            continue;
        }
        let d = info.distance_km.unwrap_or(0.0) / 100.0;
        y.push(s);
        d1.push(d);
        d2.push(d * d);
        w.push(sh.total_heads0);
        cl.push(info.district_id as u64);
    }
    if y.is_empty() {
        return Err(StudyError::Empty("first stage: no border municipalities".into()));
    }
    let n_border = y.len();
    let spec = EstimationSpec::new(y).exog(DISTANCE, d1).exog(DISTANCE_SQ, d2).weights(w).clusters(cl);
    let result = estimate(&spec, Estimator::Wls, None)
        .map_err(|source| StudyError::Estimation { study: "first stage".into(), source })?;
    Ok(FirstStageFit { result, n_border })
}
