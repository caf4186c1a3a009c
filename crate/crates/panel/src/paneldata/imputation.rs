//! Censored-wage imputation and baseline wages for the non-employed.

use std::collections::{BTreeMap, HashSet};

use flowdecomp_core::econometrics::{gaussian_mills, norm_cdf, norm_inv_cdf, upper_truncated_mean};
use flowdecomp_core::rng::{substream, Domain};
use rand::Rng;

use super::index::PanelIndex;
use super::records::{Education, SpellRecord};
use super::PanelError;

/// Minimum uncensored observations for a cell-specific fit.
pub const MIN_CELL_UNCENSORED: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImputeMode {
    /// E[w | w > limit] under the fitted normal.
    ConditionalMean,
    /// A seeded draw from the fitted normal truncated at the limit.
    Draw { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TobitFit {
    pub mu: f64,
    pub sigma: f64,
    pub n_uncensored: usize,
    pub n_censored: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImputationReport {
    pub n_censored: usize,
    /// Cells as (female, district, year) with their fits.
    pub cell_fits: BTreeMap<(bool, u32, i32), TobitFit>,
    /// Cells that fell back to the pooled (female, year) fit.
    pub pooled_cells: Vec<(bool, u32, i32)>,
}

/// Maximum-likelihood normal fit to right-censored data. `limits[i]` is used
/// only where `censored[i]`.
pub fn fit_censored_normal(values: &[f64], censored: &[bool]) -> Result<TobitFit, PanelError> {
    let n_cens = censored.iter().filter(|&&c| c).count();
    let unc: Vec<f64> = values.iter().zip(censored).filter(|(_, &c)| !c).map(|(v, _)| *v).collect();
    if unc.len() < 2 {
        return Err(PanelError::Imputation(format!(
            "censored-normal fit needs at least 2 uncensored values, found {}",
            unc.len()
        )));
    }
    let m = unc.iter().sum::<f64>() / unc.len() as f64;
    let v = unc.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (unc.len() - 1) as f64;
    let mut mu = m;
    let mut tau = v.sqrt().max(1e-6).ln();

    let ll = |mu: f64, tau: f64| -> f64 {
        let s = tau.exp();
        values
            .iter()
            .zip(censored)
            .map(|(&y, &c)| {
                let z = (y - mu) / s;
                if c {
                    gaussian_mills(-z).log_cdf
                } else {
                    -tau - 0.5 * z * z
                }
            })
            .sum()
    };
    let mut cur = ll(mu, tau);
    for _ in 0..200 {
        let s = tau.exp();
        let (mut g1, mut g2, mut h11, mut h12, mut h22) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&y, &c) in values.iter().zip(censored) {
            let z = (y - mu) / s;
            if c {
                let m = gaussian_mills(-z).lambda;
                let dm = m * (m - z);
                g1 += m / s;
                g2 += m * z;
                h11 -= dm / (s * s);
                h12 -= (z * dm + m) / s;
                h22 -= z * z * dm + m * z;
            } else {
                g1 += z / s;
                g2 += z * z - 1.0;
                h11 -= 1.0 / (s * s);
                h12 -= 2.0 * z / s;
                h22 -= 2.0 * z * z;
            }
        }
        let gnorm = g1.abs().max(g2.abs()) / values.len() as f64;
        if gnorm < 1e-10 {
            break;
        }
        // Newton if the Hessian is negative definite, gradient ascent otherwise.
        let det = h11 * h22 - h12 * h12;
        let (mut d1, mut d2) = if h11 < 0.0 && det > 0.0 {
            ((-h22 * g1 + h12 * g2) / det, (h12 * g1 - h11 * g2) / det)
        } else {
            let scale = 1.0 / values.len() as f64;
            (g1 * scale * s * s, g2 * scale)
        };
        // Stop once the predicted gain is at rounding level.
        if (g1 * d1 + g2 * d2) / (values.len() as f64) < 1e-15 {
            break;
        }
        let mut improved = false;
        for _ in 0..50 {
            let next = ll(mu + d1, tau + d2);
            if next.is_finite() && next >= cur {
                mu += d1;
                tau += d2;
                cur = next;
                improved = true;
                break;
            }
            d1 *= 0.5;
            d2 *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !(mu.is_finite() && tau.is_finite()) {
        return Err(PanelError::Imputation("censored-normal fit diverged".into()));
    }
    Ok(TobitFit { mu, sigma: tau.exp(), n_uncensored: unc.len(), n_censored: n_cens })
}

fn truncated_draw(fit: &TobitFit, limit: f64, u: f64) -> f64 {
    let z = (limit - fit.mu) / fit.sigma;
    // Sample the upper tail through its own probability mass to keep precision.
    let tail = norm_cdf(-z);
    let p = (u * tail).clamp(f64::MIN_POSITIVE, tail);
    let draw = fit.mu - fit.sigma * norm_inv_cdf(p);
    if draw > limit {
        draw
    } else {
        upper_truncated_mean(fit.mu, fit.sigma, limit)
    }
}

/// Replaces censored wages using censored-normal fits per gender × district ×
/// year cell, falling back to the pooled gender × year fit for cells with
/// fewer than [`MIN_CELL_UNCENSORED`] uncensored wages. Each censored record's
/// stored wage is its limit. Uncensored records are untouched; the `censored`
/// flag is kept so imputed values stay identifiable.
pub fn impute_censored(records: &mut [SpellRecord], mode: ImputeMode) -> Result<ImputationReport, PanelError> {
    type Cell = (bool, u32, i32);
    let mut cells: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
    let mut pooled: BTreeMap<(bool, i32), Vec<usize>> = BTreeMap::new();
    let mut any_censored = false;
    for (i, r) in records.iter().enumerate() {
        if !r.employed || r.log_daily_wage.is_none() {
            continue;
        }
        any_censored |= r.censored;
        cells.entry((r.female, r.district_id.unwrap_or(u32::MAX), r.year)).or_default().push(i);
        pooled.entry((r.female, r.year)).or_default().push(i);
    }
    let mut report = ImputationReport::default();
    if !any_censored {
        return Ok(report);
    }
    let fit_of = |idx: &[usize]| -> Result<TobitFit, PanelError> {
        let vals: Vec<f64> = idx.iter().map(|&i| records[i].log_daily_wage.unwrap()).collect();
        let cens: Vec<bool> = idx.iter().map(|&i| records[i].censored).collect();
        fit_censored_normal(&vals, &cens)
    };
    let mut pooled_fits: BTreeMap<(bool, i32), TobitFit> = BTreeMap::new();
    let mut updates: Vec<(usize, f64)> = Vec::new();
    for (&cell, idx) in &cells {
        let n_cens = idx.iter().filter(|&&i| records[i].censored).count();
        if n_cens == 0 {
            continue;
        }
        let fit = if idx.len() - n_cens >= MIN_CELL_UNCENSORED {
            fit_of(idx)?
        } else {
            report.pooled_cells.push(cell);
            let key = (cell.0, cell.2);
            if let Some(f) = pooled_fits.get(&key) {
                *f
            } else {
                let f = fit_of(&pooled[&key]).map_err(|e| {
                    PanelError::Imputation(format!("cell (female={}, district={}, year={}): {e}", cell.0, cell.1, cell.2))
                })?;
                pooled_fits.insert(key, f);
                f
            }
        };
        report.cell_fits.insert(cell, fit);
        for &i in idx {
            if records[i].censored {
                let limit = records[i].log_daily_wage.unwrap();
                let v = match mode {
                    ImputeMode::ConditionalMean => upper_truncated_mean(fit.mu, fit.sigma, limit),
                    ImputeMode::Draw { seed } => {
                        let u: f64 = substream(seed, Domain::Imputation, records[i].worker_id ^ ((records[i].year as u64) << 48))
                            .random();
                        truncated_draw(&fit, limit, u)
                    }
                };
                updates.push((i, v));
            }
        }
    }
    report.n_censored = updates.len();
    for (i, v) in updates {
        records[i].log_daily_wage = Some(v);
    }
    Ok(report)
}

/// Mean full-time native log wage by year over the given regions.
pub fn mean_log_wage_by_year(records: &[SpellRecord], regions: &HashSet<u32>) -> BTreeMap<i32, f64> {
    let mut acc: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    for r in records {
        if r.is_full_time() && r.in_native_sample() && r.muni_id.is_some_and(|m| regions.contains(&m)) {
            let e = acc.entry(r.year).or_default();
            e.0 += r.log_daily_wage.unwrap();
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(y, (s, n))| (y, s / n as f64)).collect()
}

/// Base-period wage of a worker not employed at `base_year`: the most recent
/// full-time wage in the four preceding years within the study regions,
/// moved forward by aggregate wage growth.
pub fn impute_nonemployed_baseline(
    history: &[SpellRecord],
    base_year: i32,
    mean_log_wage: &BTreeMap<i32, f64>,
    regions: &HashSet<u32>,
) -> Result<f64, PanelError> {
    let worker_id = history.first().map(|s| s.worker_id).unwrap_or(0);
    let last = history
        .iter()
        .filter(|s| {
            s.year < base_year
                && s.year >= base_year - 4
                && s.is_full_time()
                && s.in_native_sample()
                && s.muni_id.is_some_and(|m| regions.contains(&m))
        })
        .max_by_key(|s| s.year)
        .ok_or(PanelError::NotInSample { worker_id, reason: "no full-time spell in the four prior years" })?;
    let (Some(&w0), Some(&wt)) = (mean_log_wage.get(&base_year), mean_log_wage.get(&last.year)) else {
        return Err(PanelError::NotInSample { worker_id, reason: "aggregate wage missing for a needed year" });
    };
    Ok(last.log_daily_wage.unwrap() + (w0 - wt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonEmployedWorker {
    pub worker_id: u64,
    /// Municipality of the last spell before the base year.
    pub origin_muni: u32,
    pub last_spell_year: i32,
    /// `None` when no full-time spell qualifies for the wage imputation.
    pub imputed_wage0: Option<f64>,
    pub age0: u8,
    pub female: bool,
    pub education: Education,
}

/// Workers without native employment at `base_year` whose most recent spell
/// in the four prior years was in a study region.
pub fn build_nonemployed_sample(
    index: &PanelIndex,
    base_year: i32,
    regions: &HashSet<u32>,
    mean_log_wage: &BTreeMap<i32, f64>,
) -> Vec<NonEmployedWorker> {
    let mut out = Vec::new();
    for w in 0..index.n_workers() {
        let spells = index.worker(w);
        if !spells[0].in_native_sample() {
            continue;
        }
        if index.at(w, base_year).is_some_and(|s| s.employed) {
            continue;
        }
        let Some(last) = spells
            .iter()
            .filter(|s| s.employed && s.year < base_year && s.year >= base_year - 4)
            .max_by_key(|s| s.year)
        else {
            continue;
        };
        let Some(origin) = last.muni_id.filter(|m| regions.contains(m)) else {
            continue;
        };
        let age0 = (last.age as i32 + base_year - last.year).clamp(0, 255) as u8;
        out.push(NonEmployedWorker {
            worker_id: last.worker_id,
            origin_muni: origin,
            last_spell_year: last.year,
            imputed_wage0: impute_nonemployed_baseline(spells, base_year, mean_log_wage, regions).ok(),
            age0,
            female: last.female,
            education: last.education,
        });
    }
    out
}
