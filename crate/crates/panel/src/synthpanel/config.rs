use flowdecomp_core::canonical_model::{EconomySpec, Lambda, WorkerTypeSpec};

use crate::paneldata::PanelError;

/// Quadratic first stage of the head-count shock in distance/100.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstStage {
    pub constant: f64,
    pub b1: f64,
    pub b2: f64,
    /// Shock level of control municipalities.
    pub control_level: f64,
    /// Half-width of the uniform multiplicative noise: ΔI = mean·(1 + u),
    /// u ~ U[−spread, spread].
    pub noise_spread: f64,
}

impl Default for FirstStage {
    fn default() -> Self {
        Self { constant: 0.103, b1: -0.308, b2: 0.247, control_level: 0.001, noise_spread: 0.5 }
    }
}

impl FirstStage {
    pub fn mean_border(&self, distance_km: f64) -> f64 {
        let d = distance_km / 100.0;
        self.constant + self.b1 * d + self.b2 * d * d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutConfig {
    pub n_border: usize,
    pub n_control: usize,
    /// Border districts: `border_depth_bands` equal distance bands, each
    /// split into segments along the border.
    pub n_border_districts: usize,
    pub border_depth_bands: usize,
    pub n_control_districts: usize,
    pub max_distance_km: f64,
    /// Base-year incumbents per municipality, uniform on this inclusive range.
    pub workers_min: u32,
    pub workers_max: u32,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            n_border: 290,
            n_control: 1210,
            n_border_districts: 21,
            border_depth_bands: 3,
            n_control_districts: 20,
            max_distance_km: 75.0,
            workers_min: 30,
            workers_max: 104,
        }
    }
}

/// Employment flow process. Base rates are linear in years since the base
/// year; shock responses are slopes in the local log wage change.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Population-weighted displacement elasticity, split across types in
    /// proportion to their η.
    pub displacement: f64,
    /// Population-weighted relocation elasticity, split the same way.
    pub relocation: f64,
    pub exit_base: f64,
    pub exit_slope: f64,
    pub relocate_base: f64,
    pub relocate_slope: f64,
    /// Half-width of the uniform district-year shock to inflow rates.
    pub inflow_noise: f64,
    /// Non-employed pool size per incumbent of the same type.
    pub nonemp_pool: f64,
    /// Share of inflows drawn from the non-employed pool; the rest come
    /// from workers employed elsewhere.
    pub nonemp_inflow_share: f64,
    pub outside_pool: f64,
    /// Annual rate at which non-employed pool workers find jobs elsewhere.
    pub other_job_base: f64,
    pub other_job_slope: f64,
    /// Scales the shock's wage effect for workers re-entering from
    /// non-employment.
    pub reentry_wage_mult: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            displacement: 0.745,
            relocation: 0.218,
            exit_base: 0.10,
            exit_slope: 0.04,
            relocate_base: 0.06,
            relocate_slope: 0.02,
            inflow_noise: 0.02,
            nonemp_pool: 1.0,
            nonemp_inflow_share: 0.5,
            outside_pool: 0.6,
            other_job_base: 0.05,
            other_job_slope: 0.03,
            reentry_wage_mult: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WageConfig {
    pub base_level: f64,
    pub trend: f64,
    /// Std of municipality wage effects.
    pub sigma_region: f64,
    /// Std of worker fixed effects within type.
    pub sigma_theta: f64,
    /// Std of i.i.d. worker-year wage shocks.
    pub sigma_e: f64,
    /// Std of district-year wage shocks.
    pub sigma_district: f64,
    pub age_linear: f64,
    pub age_quadratic: f64,
    /// Log-wage censoring point in the base year.
    pub censor_limit: f64,
    /// Annual drift of the censoring point.
    pub censor_trend: f64,
    pub apprentice_offset: f64,
}

impl Default for WageConfig {
    fn default() -> Self {
        Self {
            base_level: 4.3,
            trend: 0.02,
            sigma_region: 0.1,
            sigma_theta: 0.1,
            sigma_e: 0.123,
            sigma_district: 0.01,
            age_linear: 0.01,
            age_quadratic: -0.0004,
            censor_limit: 5.3,
            censor_trend: 0.02,
            apprentice_offset: -0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demographics {
    /// Inclusive age range in the base year.
    pub age_min: u8,
    pub age_max: u8,
    pub female_share: f64,
    /// Probability that education equals the type's own level
    /// (type k gets the k-th education level, capped at the last);
    /// otherwise education is uniform.
    pub education_link: f64,
    /// Expected apprentices per incumbent and year.
    pub apprentice_rate: f64,
    /// Proportional response of apprentice employment to the shock.
    pub apprentice_response: f64,
}

impl Default for Demographics {
    fn default() -> Self {
        Self {
            age_min: 20,
            age_max: 60,
            female_share: 0.45,
            education_link: 0.6,
            apprentice_rate: 0.15,
            apprentice_response: 1.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskMix {
    pub n_occupations: u32,
    pub n_routine_occupations: u32,
    /// Probability of a routine occupation, per worker type.
    pub routine_prob: Vec<f64>,
    pub routine_intensity: (f64, f64),
    pub abstract_intensity: (f64, f64),
    /// Per-year probability slope of switching task class after the base year.
    pub switch_rate: f64,
    pub survey_per_occupation: u32,
    pub max_survey_tasks: u32,
}

impl Default for TaskMix {
    fn default() -> Self {
        Self {
            n_occupations: 20,
            n_routine_occupations: 14,
            routine_prob: vec![0.85, 0.7, 0.55],
            routine_intensity: (0.05, 0.35),
            abstract_intensity: (0.65, 0.95),
            switch_rate: 0.02,
            survey_per_occupation: 60,
            max_survey_tasks: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub start_year: i32,
    pub end_year: i32,
    /// Commuter inflow starts the year after; 60% arrive in the first year.
    pub base_year: i32,
    /// Types carry (theta, eta, population share).
    pub economy: EconomySpec,
    /// Commuter wage relative to the border-region base-year mean.
    pub commuter_c: f64,
    pub first_stage: FirstStage,
    pub layout: LayoutConfig,
    pub flows: FlowConfig,
    pub wages: WageConfig,
    /// Full-time, 18–30 hours, under 18 hours.
    pub hours_mix: [f64; 3],
    pub demographics: Demographics,
    pub task_mix: TaskMix,
}

/// Type calibration reproducing η̄^P = 4.64 and η̄^E = 3.68, with higher
/// efficiency paired with lower supply elasticity.
pub fn calibrated_types() -> Vec<WorkerTypeSpec> {
    vec![
        WorkerTypeSpec::new(0.75, 7.5, 0.3),
        WorkerTypeSpec::new(1.0, 4.5, 0.4),
        WorkerTypeSpec::new(1.1875 / 0.514, 0.59 / 0.3, 0.3),
    ]
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            start_year: 1986,
            end_year: 1995,
            base_year: 1990,
            economy: EconomySpec {
                alpha: 0.3,
                lambda_capital: Lambda::Infinite,
                tfp: 1.0,
                types: calibrated_types(),
                phi_override: Some(-1.95),
            },
            commuter_c: 0.789,
            first_stage: FirstStage::default(),
            layout: LayoutConfig::default(),
            flows: FlowConfig::default(),
            wages: WageConfig::default(),
            hours_mix: [0.8, 0.12, 0.08],
            demographics: Demographics::default(),
            task_mix: TaskMix::default(),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> PanelError {
    PanelError::Config(msg.into())
}

fn prob(name: &str, v: f64) -> Result<(), PanelError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(cfg_err(format!("{name} = {v} is not a probability")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<(), PanelError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(format!("{name} = {v} must be non-negative and finite")))
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PanelError> {
    value.trim().parse().map_err(|_| cfg_err(format!("{key}: cannot parse {value:?}")))
}

impl SimConfig {
    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.start_year..=self.end_year
    }

    pub fn n_municipalities(&self) -> usize {
        self.layout.n_border + self.layout.n_control
    }

    /// Checks everything that can be checked without drawing: ranges,
    /// categorical sums, and that every flow probability stays in [0, 1]
    /// over the largest shock the first stage can produce.
    pub fn validate(&self) -> Result<(), PanelError> {
        if !(self.start_year < self.base_year && self.base_year + 2 <= self.end_year) {
            return Err(cfg_err(format!(
                "years {}..={} must start before the base year {} and reach two years past it",
                self.start_year, self.end_year, self.base_year
            )));
        }
        self.economy.validate().map_err(|e| cfg_err(e.to_string()))?;
        non_negative("commuter_c", self.commuter_c)?;
        if self.commuter_c == 0.0 {
            return Err(cfg_err("commuter_c must be positive"));
        }
        let fs = &self.first_stage;
        for (n, v) in [("constant", fs.constant), ("b1", fs.b1), ("b2", fs.b2)] {
            if !v.is_finite() {
                return Err(cfg_err(format!("first_stage.{n} = {v} must be finite")));
            }
        }
        non_negative("first_stage.control_level", fs.control_level)?;
        prob("first_stage.noise_spread", fs.noise_spread)?;

        let l = &self.layout;
        if l.n_border + l.n_control == 0 {
            return Err(cfg_err("layout has no municipalities"));
        }
        if l.border_depth_bands == 0 || l.n_border_districts % l.border_depth_bands != 0 {
            return Err(cfg_err("layout.n_border_districts must be a positive multiple of layout.border_depth_bands"));
        }
        if (l.n_border > 0 && l.n_border_districts == 0) || (l.n_control > 0 && l.n_control_districts == 0) {
            return Err(cfg_err("municipalities need at least one district of their kind"));
        }
        if !(l.max_distance_km > 0.0 && l.max_distance_km.is_finite()) {
            return Err(cfg_err("layout.max_distance_km must be positive"));
        }
        if l.workers_min == 0 || l.workers_min > l.workers_max {
            return Err(cfg_err("layout worker range must satisfy 0 < min <= max"));
        }

        let w = &self.wages;
        for (n, v) in [
            ("sigma_region", w.sigma_region),
            ("sigma_theta", w.sigma_theta),
            ("sigma_e", w.sigma_e),
            ("sigma_district", w.sigma_district),
        ] {
            non_negative(n, v)?;
        }
        for (n, v) in [
            ("base_level", w.base_level),
            ("trend", w.trend),
            ("age_linear", w.age_linear),
            ("age_quadratic", w.age_quadratic),
            ("censor_limit", w.censor_limit),
            ("censor_trend", w.censor_trend),
            ("apprentice_offset", w.apprentice_offset),
        ] {
            if !v.is_finite() {
                return Err(cfg_err(format!("wages.{n} must be finite")));
            }
        }

        for (i, &p) in self.hours_mix.iter().enumerate() {
            prob(&format!("hours_mix[{i}]"), p)?;
        }
        if (self.hours_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(cfg_err("hours_mix must sum to 1"));
        }

        let d = &self.demographics;
        if d.age_min > d.age_max {
            return Err(cfg_err("demographics age range is empty"));
        }
        let span_before = (self.base_year - self.start_year) as i32;
        let span_after = (self.end_year - self.base_year) as i32;
        if (d.age_min as i32) - span_before < 16 || (d.age_max as i32) + span_after > 65 {
            return Err(cfg_err("ages must stay within 16..=65 over the simulated years"));
        }
        prob("female_share", d.female_share)?;
        prob("education_link", d.education_link)?;
        non_negative("apprentice_rate", d.apprentice_rate)?;
        if !d.apprentice_response.is_finite() || d.apprentice_response < -1.0 {
            return Err(cfg_err("apprentice_response must be finite and at least -1"));
        }

        let t = &self.task_mix;
        if t.n_occupations == 0 || t.n_routine_occupations > t.n_occupations {
            return Err(cfg_err("task_mix occupation counts are inconsistent"));
        }
        if t.routine_prob.len() != self.economy.types.len() {
            return Err(cfg_err("task_mix.routine_prob needs one entry per worker type"));
        }
        for &p in &t.routine_prob {
            prob("routine_prob", p)?;
            if (p > 0.0 && t.n_routine_occupations == 0) || (p < 1.0 && t.n_routine_occupations == t.n_occupations) {
                return Err(cfg_err("routine_prob requires occupations of both classes"));
            }
        }
        for (lo, hi) in [t.routine_intensity, t.abstract_intensity] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(cfg_err("task intensity ranges must lie within [0, 1]"));
            }
        }
        non_negative("switch_rate", t.switch_rate)?;
        prob("switch probability at the last year", t.switch_rate * span_after as f64)?;
        if t.max_survey_tasks == 0 {
            return Err(cfg_err("max_survey_tasks must be positive"));
        }

        self.validate_flows()
    }

    fn validate_flows(&self) -> Result<(), PanelError> {
        let f = &self.flows;
        for (n, v) in [
            ("displacement", f.displacement),
            ("relocation", f.relocation),
            ("exit_base", f.exit_base),
            ("exit_slope", f.exit_slope),
            ("relocate_base", f.relocate_base),
            ("relocate_slope", f.relocate_slope),
            ("inflow_noise", f.inflow_noise),
            ("nonemp_pool", f.nonemp_pool),
            ("outside_pool", f.outside_pool),
            ("other_job_base", f.other_job_base),
            ("other_job_slope", f.other_job_slope),
            ("reentry_wage_mult", f.reentry_wage_mult),
        ] {
            non_negative(n, v)?;
        }
        prob("nonemp_inflow_share", f.nonemp_inflow_share)?;
        if (f.nonemp_inflow_share > 0.0 && f.nonemp_pool == 0.0) || (f.nonemp_inflow_share < 1.0 && f.outside_pool == 0.0)
        {
            return Err(cfg_err("an inflow source has a positive share but an empty pool"));
        }

        let tp = super::truth::type_params(self).map_err(|e| cfg_err(e.to_string()))?;
        let gamma_w = tp.gamma_w;
        let before = self.base_year - self.start_year;
        let after = self.end_year - self.base_year;
        // Pools are rounded up, so n_k / size <= 1 / multiplier.
        let inv_n = if f.nonemp_pool > 0.0 { 1.0 / f.nonemp_pool } else { 0.0 };
        let inv_o = if f.outside_pool > 0.0 { 1.0 / f.outside_pool } else { 0.0 };
        for h in 1..=before.max(after) {
            let e0 = f.exit_base + f.exit_slope * h as f64;
            let l0 = f.relocate_base + f.relocate_slope * h as f64;
            let other = f.other_job_base + f.other_job_slope * h as f64;
            if h <= before {
                prob("pre-period absence", e0 + l0)?;
                prob("pre-period non-employed presence", e0 * inv_n)?;
                prob("pre-period outside presence", l0 * inv_o)?;
            }
            if h > after {
                continue;
            }
            prob("other-job rate", other)?;
            let share = if h == 1 { super::simulate::FIRST_YEAR_SHARE } else { 1.0 };
            let g_ext = gamma_w * (share * self.max_shock() + 1.0 / self.layout.workers_min as f64);
            let (g_lo, g_hi) = (g_ext.min(0.0), g_ext.max(0.0));
            for k in 0..tp.types.len() {
                let t = &tp.types[k];
                for g in [g_lo, g_hi] {
                    let pe = e0 - t.displacement * g;
                    let pl = l0 + t.relocation * g;
                    prob("exit probability", pe)?;
                    prob("relocation probability", pl)?;
                    prob("exit plus relocation probability", pe + pl)?;
                    let q = tp.kappa * (t.wage_premium - tp.mean_premium);
                    for dn in [-f.inflow_noise, f.inflow_noise] {
                        let inflow = e0 + l0 + t.crowding_out * g + q * g * g + dn;
                        let pin_n = f.nonemp_inflow_share * inflow * inv_n;
                        let pin_o = (1.0 - f.nonemp_inflow_share) * inflow * inv_o;
                        prob("non-employed entry probability", pin_n)?;
                        prob("non-employed entry or other job", pin_n + other)?;
                        prob("outside entry probability", pin_o)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest head-count shock the first stage can draw.
    pub fn max_shock(&self) -> f64 {
        let fs = &self.first_stage;
        let dmax = self.layout.max_distance_km;
        let mut m = fs.control_level;
        for i in 0..=1000 {
            m = m.max(fs.mean_border(dmax * i as f64 / 1000.0));
        }
        m * (1.0 + fs.noise_spread)
    }

    /// Sets one `key = value` entry. Keys use the field paths, e.g.
    /// `flows.displacement` or `layout.n_border`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PanelError> {
        let k = key.trim();
        macro_rules! p {
            () => {
                parse(k, value)?
            };
        }
        match k {
            "seed" => self.seed = p!(),
            "start_year" => self.start_year = p!(),
            "end_year" => self.end_year = p!(),
            "base_year" => self.base_year = p!(),
            "commuter_c" => self.commuter_c = p!(),
            "economy.phi" => self.economy.phi_override = Some(p!()),
            "economy.alpha" => self.economy.alpha = p!(),
            "economy.lambda" => {
                self.economy.lambda_capital = if value.trim() == "inf" { Lambda::Infinite } else { Lambda::Finite(p!()) };
                self.economy.phi_override = None;
            }
            "economy.types" => self.economy.types = parse_types(value)?,
            "first_stage.constant" => self.first_stage.constant = p!(),
            "first_stage.b1" => self.first_stage.b1 = p!(),
            "first_stage.b2" => self.first_stage.b2 = p!(),
            "first_stage.control_level" => self.first_stage.control_level = p!(),
            "first_stage.noise_spread" => self.first_stage.noise_spread = p!(),
            "layout.n_border" => self.layout.n_border = p!(),
            "layout.n_control" => self.layout.n_control = p!(),
            "layout.n_border_districts" => self.layout.n_border_districts = p!(),
            "layout.border_depth_bands" => self.layout.border_depth_bands = p!(),
            "layout.n_control_districts" => self.layout.n_control_districts = p!(),
            "layout.max_distance_km" => self.layout.max_distance_km = p!(),
            "layout.workers_min" => self.layout.workers_min = p!(),
            "layout.workers_max" => self.layout.workers_max = p!(),
            "flows.displacement" => self.flows.displacement = p!(),
            "flows.relocation" => self.flows.relocation = p!(),
            "flows.exit_base" => self.flows.exit_base = p!(),
            "flows.exit_slope" => self.flows.exit_slope = p!(),
            "flows.relocate_base" => self.flows.relocate_base = p!(),
            "flows.relocate_slope" => self.flows.relocate_slope = p!(),
            "flows.inflow_noise" => self.flows.inflow_noise = p!(),
            "flows.nonemp_pool" => self.flows.nonemp_pool = p!(),
            "flows.nonemp_inflow_share" => self.flows.nonemp_inflow_share = p!(),
            "flows.outside_pool" => self.flows.outside_pool = p!(),
            "flows.other_job_base" => self.flows.other_job_base = p!(),
            "flows.other_job_slope" => self.flows.other_job_slope = p!(),
            "flows.reentry_wage_mult" => self.flows.reentry_wage_mult = p!(),
            "wages.base_level" => self.wages.base_level = p!(),
            "wages.trend" => self.wages.trend = p!(),
            "wages.sigma_region" => self.wages.sigma_region = p!(),
            "wages.sigma_theta" => self.wages.sigma_theta = p!(),
            "wages.sigma_e" => self.wages.sigma_e = p!(),
            "wages.sigma_district" => self.wages.sigma_district = p!(),
            "wages.age_linear" => self.wages.age_linear = p!(),
            "wages.age_quadratic" => self.wages.age_quadratic = p!(),
            "wages.censor_limit" => self.wages.censor_limit = p!(),
            "wages.censor_trend" => self.wages.censor_trend = p!(),
            "wages.apprentice_offset" => self.wages.apprentice_offset = p!(),
            "hours_mix" => self.hours_mix = parse_array(k, value)?,
            "demographics.age_min" => self.demographics.age_min = p!(),
            "demographics.age_max" => self.demographics.age_max = p!(),
            "demographics.female_share" => self.demographics.female_share = p!(),
            "demographics.education_link" => self.demographics.education_link = p!(),
            "demographics.apprentice_rate" => self.demographics.apprentice_rate = p!(),
            "demographics.apprentice_response" => self.demographics.apprentice_response = p!(),
            "task_mix.n_occupations" => self.task_mix.n_occupations = p!(),
            "task_mix.n_routine_occupations" => self.task_mix.n_routine_occupations = p!(),
            "task_mix.routine_prob" => self.task_mix.routine_prob = parse_list(k, value)?,
            "task_mix.switch_rate" => self.task_mix.switch_rate = p!(),
            "task_mix.survey_per_occupation" => self.task_mix.survey_per_occupation = p!(),
            "task_mix.max_survey_tasks" => self.task_mix.max_survey_tasks = p!(),
            _ => return Err(cfg_err(format!("unknown simulator setting {k:?}"))),
        }
        Ok(())
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, PanelError> {
    value.split(',').map(|s| parse(key, s)).collect()
}

fn parse_array<const N: usize>(key: &str, value: &str) -> Result<[f64; N], PanelError> {
    parse_list(key, value)?
        .try_into()
        .map_err(|_| cfg_err(format!("{key}: expected {N} comma-separated values")))
}

/// `theta:eta:share` triples separated by commas.
fn parse_types(value: &str) -> Result<Vec<WorkerTypeSpec>, PanelError> {
    value
        .split(',')
        .map(|t| {
            let v: [f64; 3] = t
                .split(':')
                .map(|s| parse("economy.types", s))
                .collect::<Result<Vec<f64>, _>>()?
                .try_into()
                .map_err(|_| cfg_err(format!("economy.types: expected theta:eta:share, found {t:?}")))?;
            Ok(WorkerTypeSpec::new(v[0], v[1], v[2]))
        })
        .collect()
}
