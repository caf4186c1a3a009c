//! Closed-form targets implied by a simulator configuration.

use std::fmt::Write as _;
use std::path::Path;

use flowdecomp_core::canonical_model::{
    elasticity_components, forward_responses, ModelError, ShockSpec, TypeFlows,
};

use super::config::SimConfig;
use crate::paneldata::PanelError;

/// Per-type simulator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeParam {
    pub share: f64,
    pub theta: f64,
    pub eta: f64,
    /// Log-wage premium θ_k/θ̄ − 1.
    pub wage_premium: f64,
    /// Slopes of exit, inflow and relocation rates in the local log wage.
    pub displacement: f64,
    pub crowding_out: f64,
    pub relocation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeParams {
    pub gamma_w: f64,
    pub types: Vec<TypeParam>,
    pub mean_premium: f64,
    /// Population curvature of inflows; see `inflow_curvature`.
    pub kappa: f64,
}

/// Curvature κ that makes the expected mean log wage exactly linear in the
/// local wage change g when type-k inflows carry an extra κ(x_k − x̄)g²:
/// κ = cov(η, x)·η̄ / var(x), moments under the given shares.
pub fn inflow_curvature(shares: &[f64], eta: &[f64], premium: &[f64]) -> (f64, f64) {
    let total: f64 = shares.iter().sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let m = |f: &dyn Fn(usize) -> f64| (0..shares.len()).map(|k| shares[k] * f(k)).sum::<f64>() / total;
    let xbar = m(&|k| premium[k]);
    let ebar = m(&|k| eta[k]);
    let var = m(&|k| (premium[k] - xbar).powi(2));
    let cov = m(&|k| (eta[k] - ebar) * (premium[k] - xbar));
    if var <= 1e-300 {
        (0.0, xbar)
    } else {
        (cov * ebar / var, xbar)
    }
}

pub fn type_params(cfg: &SimConfig) -> Result<TypeParams, ModelError> {
    let resp = forward_responses(&cfg.economy, &ShockSpec { d_i_head: 1.0, c_ratio: cfg.commuter_c })?;
    let types = &cfg.economy.types;
    let total: f64 = types.iter().map(|t| t.count).sum();
    let theta_bar: f64 = types.iter().map(|t| t.count * t.theta).sum::<f64>() / total;
    let eta_pop = resp.eta_pop;
    let scale = |target: f64, eta: f64| if eta_pop > 0.0 { target * eta / eta_pop } else { 0.0 };
    let out: Vec<TypeParam> = types
        .iter()
        .map(|t| {
            let displacement = scale(cfg.flows.displacement, t.eta);
            let relocation = scale(cfg.flows.relocation, t.eta);
            TypeParam {
                share: t.count / total,
                theta: t.theta,
                eta: t.eta,
                wage_premium: t.theta / theta_bar - 1.0,
                displacement,
                crowding_out: t.eta - displacement + relocation,
                relocation,
            }
        })
        .collect();
    let shares: Vec<f64> = out.iter().map(|t| t.share).collect();
    let eta: Vec<f64> = out.iter().map(|t| t.eta).collect();
    let prem: Vec<f64> = out.iter().map(|t| t.wage_premium).collect();
    let (kappa, mean_premium) = inflow_curvature(&shares, &eta, &prem);
    Ok(TypeParams { gamma_w: resp.pure_wage, types: out, mean_premium, kappa })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeTruth {
    pub share: f64,
    pub theta: f64,
    pub eta: f64,
    pub displacement: f64,
    pub crowding_out: f64,
    pub relocation: f64,
}

/// Theoretical coefficients per unit head-count shock.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub beta_r: f64,
    pub gamma_w: f64,
    pub gamma_r: f64,
    pub eta_eff: f64,
    pub eta_pop: f64,
    pub phi: f64,
    pub c: f64,
    pub displacement: f64,
    pub crowding_out: f64,
    pub relocation: f64,
    pub apprentice_response: f64,
    pub upgrade: f64,
    /// Drop in the job-finding share of the base-year non-employed.
    pub nonemp_displacement: f64,
    pub nonemp_pure_wage: f64,
    /// Std of two-year-apart differences in the transitory wage component.
    pub sigma_de: f64,
    pub first_stage: [f64; 3],
    pub types: Vec<TypeTruth>,
}

pub fn ground_truth(cfg: &SimConfig) -> Result<GroundTruth, PanelError> {
    let err = |e: ModelError| PanelError::Config(e.to_string());
    let resp = forward_responses(&cfg.economy, &ShockSpec { d_i_head: 1.0, c_ratio: cfg.commuter_c }).map_err(err)?;
    let tp = type_params(cfg).map_err(err)?;
    let g = resp.pure_wage;
    let f = &cfg.flows;
    // Population share employed in the region at base, with both pools.
    let p0 = 1.0 / (1.0 + f.nonemp_pool + f.outside_pool);
    let mut types = Vec::new();
    let (mut disp, mut crowd, mut reloc) = (0.0, 0.0, 0.0);
    for t in &tp.types {
        let comp = elasticity_components(&TypeFlows {
            p_employed_r0: p0,
            d_employed_given_r0: t.displacement,
            d_enter_given_not_r0: t.crowding_out * p0 / (1.0 - p0),
            d_relocate_given_r0: t.relocation,
        })
        .map_err(err)?;
        disp += t.share * comp.displacement;
        crowd += t.share * comp.crowding_out;
        reloc += t.share * comp.relocation;
        types.push(TypeTruth {
            share: t.share,
            theta: t.theta,
            eta: t.eta,
            displacement: comp.displacement,
            crowding_out: comp.crowding_out,
            relocation: comp.relocation,
        });
    }
    let nonemp_finding = if f.nonemp_pool > 0.0 { f.nonemp_inflow_share / f.nonemp_pool * g * crowd } else { 0.0 };
    Ok(GroundTruth {
        beta_r: resp.employment,
        gamma_w: g,
        gamma_r: resp.regional_wage,
        eta_eff: resp.eta_eff,
        eta_pop: resp.eta_pop,
        phi: resp.phi,
        c: cfg.commuter_c,
        displacement: -g * disp,
        crowding_out: g * crowd,
        relocation: g * reloc,
        apprentice_response: cfg.demographics.apprentice_response,
        upgrade: 0.0,
        nonemp_displacement: -nonemp_finding,
        nonemp_pure_wage: f.reentry_wage_mult * g,
        sigma_de: std::f64::consts::SQRT_2 * cfg.wages.sigma_e,
        first_stage: [cfg.first_stage.constant, cfg.first_stage.b1, cfg.first_stage.b2],
        types,
    })
}

impl GroundTruth {
    fn scalars(&self) -> [(&'static str, f64); 17] {
        [
            ("beta_r", self.beta_r),
            ("gamma_w", self.gamma_w),
            ("gamma_r", self.gamma_r),
            ("eta_eff", self.eta_eff),
            ("eta_pop", self.eta_pop),
            ("phi", self.phi),
            ("c", self.c),
            ("displacement", self.displacement),
            ("crowding_out", self.crowding_out),
            ("relocation", self.relocation),
            ("apprentice_response", self.apprentice_response),
            ("upgrade", self.upgrade),
            ("nonemp_displacement", self.nonemp_displacement),
            ("nonemp_pure_wage", self.nonemp_pure_wage),
            ("sigma_de", self.sigma_de),
            ("first_stage_constant", self.first_stage[0]),
            ("first_stage_b1", self.first_stage[1]),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.scalars() {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "first_stage_b2 = {}", self.first_stage[2]);
        for (i, t) in self.types.iter().enumerate() {
            let _ = writeln!(
                s,
                "type{i} = share:{} theta:{} eta:{} displacement:{} crowding_out:{} relocation:{}",
                t.share, t.theta, t.eta, t.displacement, t.crowding_out, t.relocation
            );
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), PanelError> {
        std::fs::write(path, self.to_text())
            .map_err(|e| PanelError::Io { path: path.display().to_string(), message: e.to_string() })
    }

    /// Parses the scalar keys written by `to_text`; per-type lines are kept
    /// as written. Unknown keys are an error.
    pub fn parse(text: &str) -> Result<GroundTruth, PanelError> {
        let mut t = GroundTruth {
            beta_r: f64::NAN,
            gamma_w: f64::NAN,
            gamma_r: f64::NAN,
            eta_eff: f64::NAN,
            eta_pop: f64::NAN,
            phi: f64::NAN,
            c: f64::NAN,
            displacement: f64::NAN,
            crowding_out: f64::NAN,
            relocation: f64::NAN,
            apprentice_response: f64::NAN,
            upgrade: f64::NAN,
            nonemp_displacement: f64::NAN,
            nonemp_pure_wage: f64::NAN,
            sigma_de: f64::NAN,
            first_stage: [f64::NAN; 3],
            types: Vec::new(),
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let schema = |message: String| PanelError::Schema { line: n + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| schema(format!("expected key = value, found {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.starts_with("type") {
                let mut tt = TypeTruth { share: 0.0, theta: 0.0, eta: 0.0, displacement: 0.0, crowding_out: 0.0, relocation: 0.0 };
                for part in v.split_whitespace() {
                    let (name, num) = part.split_once(':').ok_or_else(|| schema(format!("bad type field {part:?}")))?;
                    let num: f64 = num.parse().map_err(|_| schema(format!("bad number {num:?}")))?;
                    match name {
                        "share" => tt.share = num,
                        "theta" => tt.theta = num,
                        "eta" => tt.eta = num,
                        "displacement" => tt.displacement = num,
                        "crowding_out" => tt.crowding_out = num,
                        "relocation" => tt.relocation = num,
                        _ => return Err(schema(format!("unknown type field {name:?}"))),
                    }
                }
                t.types.push(tt);
                continue;
            }
            let num: f64 = v.parse().map_err(|_| schema(format!("bad number {v:?}")))?;
            let slot = match k {
                "beta_r" => &mut t.beta_r,
                "gamma_w" => &mut t.gamma_w,
                "gamma_r" => &mut t.gamma_r,
                "eta_eff" => &mut t.eta_eff,
                "eta_pop" => &mut t.eta_pop,
                "phi" => &mut t.phi,
                "c" => &mut t.c,
                "displacement" => &mut t.displacement,
                "crowding_out" => &mut t.crowding_out,
                "relocation" => &mut t.relocation,
                "apprentice_response" => &mut t.apprentice_response,
                "upgrade" => &mut t.upgrade,
                "nonemp_displacement" => &mut t.nonemp_displacement,
                "nonemp_pure_wage" => &mut t.nonemp_pure_wage,
                "sigma_de" => &mut t.sigma_de,
                "first_stage_constant" => &mut t.first_stage[0],
                "first_stage_b1" => &mut t.first_stage[1],
                "first_stage_b2" => &mut t.first_stage[2],
                _ => return Err(schema(format!("unknown key {k:?}"))),
            };
            *slot = num;
        }
        Ok(t)
    }
}
