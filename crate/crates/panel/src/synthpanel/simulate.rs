use flowdecomp_core::rng::{substream, Domain};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use super::config::SimConfig;
use super::truth::{ground_truth, inflow_curvature, type_params, GroundTruth, TypeParams};
use crate::paneldata::{
    Education, HoursBand, MunicipalityInfo, Nationality, PanelError, SpellRecord, TaskClass, TaskSurveyRow,
};

/// Outside employment is recorded at this offset plus the home district.
pub const OUTSIDE_MUNI_BASE: u32 = 100_000;
const ID_STRIDE: u64 = 1_000_000;
const APPRENTICE_ID_OFFSET: u64 = 100_000;
const COMMUTER_ID_OFFSET: u64 = 900_000;
/// Share of the full commuter inflow present in the first post-base year.
pub const FIRST_YEAR_SHARE: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MunicipalitySpec {
    pub muni_id: u32,
    pub district_id: u32,
    pub is_border: bool,
    pub distance_km: Option<f64>,
    pub n_workers0: u32,
}

impl MunicipalitySpec {
    pub fn info(&self) -> MunicipalityInfo {
        MunicipalityInfo {
            muni_id: self.muni_id,
            district_id: self.district_id,
            is_border: self.is_border,
            distance_km: self.distance_km,
        }
    }
}

/// Realized shock of one municipality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockPath {
    pub muni_id: u32,
    /// Drawn head-count share before rounding to whole commuters.
    pub delta_star: f64,
    /// Everyone employed in the municipality in the base year.
    pub total_heads0: u32,
    pub commuters_first: u32,
    pub commuters_full: u32,
}

impl ShockPath {
    /// Head-count share of commuters in year `t`.
    pub fn intensity(&self, t: i32, base_year: i32) -> f64 {
        let c = if t <= base_year {
            0
        } else if t == base_year + 1 {
            self.commuters_first
        } else {
            self.commuters_full
        };
        c as f64 / self.total_heads0 as f64
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub spells: Vec<SpellRecord>,
    pub municipalities: Vec<MunicipalitySpec>,
    pub shocks: Vec<ShockPath>,
    pub survey: Vec<TaskSurveyRow>,
    pub truth: GroundTruth,
    /// Ids of workers drawn into a non-employment entrant pool.
    pub nonemployed_pool: Vec<u64>,
}

/// Head-count shock: the first-stage mean times (1 + u) with u uniform on
/// [−spread, spread], floored at zero.
pub fn draw_shock(muni: &MunicipalitySpec, cfg: &SimConfig, rng: &mut impl Rng) -> f64 {
    let fs = &cfg.first_stage;
    let u = fs.noise_spread * (2.0 * rng.random::<f64>() - 1.0);
    let mean = if muni.is_border { fs.mean_border(muni.distance_km.unwrap_or(0.0)) } else { fs.control_level };
    (mean * (1.0 + u)).max(0.0)
}

pub fn layout(cfg: &SimConfig) -> Vec<MunicipalitySpec> {
    let l = &cfg.layout;
    let mut rng = substream(cfg.seed, Domain::Layout, 0);
    let depth = l.border_depth_bands.max(1);
    let segments = (l.n_border_districts / depth).max(1);
    let band = l.max_distance_km / depth as f64;
    let mut out = Vec::with_capacity(l.n_border + l.n_control);
    for i in 0..l.n_border {
        let d = rng.random::<f64>() * l.max_distance_km;
        let row = ((d / band) as usize).min(depth - 1);
        let district = (row * segments + rng.random_range(0..segments)) as u32 + 1;
        out.push(MunicipalitySpec {
            muni_id: i as u32 + 1,
            district_id: district,
            is_border: true,
            distance_km: Some(d),
            n_workers0: rng.random_range(l.workers_min..=l.workers_max),
        });
    }
    for i in 0..l.n_control {
        out.push(MunicipalitySpec {
            muni_id: (l.n_border + i) as u32 + 1,
            district_id: (l.n_border_districts + i % l.n_control_districts) as u32 + 1,
            is_border: false,
            distance_km: None,
            n_workers0: rng.random_range(l.workers_min..=l.workers_max),
        });
    }
    out
}

/// District-year wage shocks and inflow-rate shocks, indexed
/// [district_id − 1][year − start_year].
struct DistrictShocks {
    wage: Vec<Vec<f64>>,
    inflow: Vec<Vec<f64>>,
}

fn district_shocks(cfg: &SimConfig) -> DistrictShocks {
    let n = cfg.layout.n_border_districts + cfg.layout.n_control_districts;
    let years = (cfg.end_year - cfg.start_year + 1) as usize;
    let mut rng = substream(cfg.seed, Domain::Layout, 1);
    let mut wage = vec![vec![0.0; years]; n];
    let mut inflow = vec![vec![0.0; years]; n];
    for d in 0..n {
        for y in 0..years {
            let z: f64 = rng.sample(StandardNormal);
            wage[d][y] = cfg.wages.sigma_district * z;
            inflow[d][y] = cfg.flows.inflow_noise * (2.0 * rng.random::<f64>() - 1.0);
        }
    }
    DistrictShocks { wage, inflow }
}

/// Integer counts summing to `n` with shares as close as possible
/// (largest remainders, ties to the lower index).
pub fn stratified_counts(n: u32, shares: &[f64]) -> Vec<u32> {
    let total: f64 = shares.iter().sum();
    let exact: Vec<f64> = shares.iter().map(|s| n as f64 * s / total).collect();
    let mut counts: Vec<u32> = exact.iter().map(|e| e.floor() as u32).collect();
    let mut left = n - counts.iter().sum::<u32>();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    counts
}

fn stochastic_round(x: f64, rng: &mut impl Rng) -> u32 {
    let f = x.floor();
    f as u32 + u32::from(rng.random::<f64>() < x - f)
}

fn poisson(mean: f64, rng: &mut impl Rng) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u32).unwrap_or(0)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Incumbent,
    NonEmpPool,
    OutsidePool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Here,
    Outside,
    NonEmployed,
}

const EDUCATION: [Education; 3] = [Education::None, Education::Apprenticeship, Education::University];
const HOURS: [HoursBand; 3] = [HoursBand::FullTime, HoursBand::Part18to30, HoursBand::PartUnder18];

struct Ctx<'a> {
    cfg: &'a SimConfig,
    tp: &'a TypeParams,
    ds: &'a DistrictShocks,
}

impl Ctx<'_> {
    fn e0(&self, h: i32) -> f64 {
        self.cfg.flows.exit_base + self.cfg.flows.exit_slope * h as f64
    }

    fn l0(&self, h: i32) -> f64 {
        self.cfg.flows.relocate_base + self.cfg.flows.relocate_slope * h as f64
    }

    fn yi(&self, t: i32) -> usize {
        (t - self.cfg.start_year) as usize
    }

    fn task_class(&self, occ: u32) -> TaskClass {
        if occ <= self.cfg.task_mix.n_routine_occupations {
            TaskClass::Routine
        } else {
            TaskClass::Abstract
        }
    }

    fn draw_occupation(&self, routine: bool, rng: &mut impl Rng) -> u32 {
        let t = &self.cfg.task_mix;
        let nr = t.n_routine_occupations;
        let na = t.n_occupations - nr;
        match (routine && nr > 0) || na == 0 {
            true => rng.random_range(1..=nr),
            false => nr + rng.random_range(1..=na),
        }
    }

    fn censor(&self, log_wage: f64, t: i32) -> (f64, bool) {
        let w = &self.cfg.wages;
        let limit = w.censor_limit + w.censor_trend * (t - self.cfg.base_year) as f64;
        if log_wage > limit {
            (limit, true)
        } else {
            (log_wage, false)
        }
    }
}

struct MuniOutput {
    records: Vec<SpellRecord>,
    shock: ShockPath,
    pool: Vec<u64>,
}

fn simulate_municipality(ctx: &Ctx<'_>, idx: usize, m: &MunicipalitySpec) -> MuniOutput {
    let cfg = ctx.cfg;
    let base = cfg.base_year;
    let f = &cfg.flows;
    let w = &cfg.wages;
    let demo = &cfg.demographics;
    let mut rng = substream(cfg.seed, Domain::Municipality, m.muni_id as u64);

    let delta_star = draw_shock(m, cfg, &mut rng);
    let z: f64 = rng.sample(StandardNormal);
    let f_r = w.sigma_region * z;
    let apprentices0 = poisson(demo.apprentice_rate * m.n_workers0 as f64, &mut rng);
    let total_heads0 = m.n_workers0 + apprentices0;
    let full = stochastic_round(delta_star * total_heads0 as f64, &mut rng);
    let first = stochastic_round(FIRST_YEAR_SHARE * full as f64, &mut rng);
    let shock = ShockPath {
        muni_id: m.muni_id,
        delta_star,
        total_heads0,
        commuters_first: first,
        commuters_full: full,
    };

    let shares: Vec<f64> = ctx.tp.types.iter().map(|t| t.share).collect();
    let counts = stratified_counts(m.n_workers0, &shares);
    let eta: Vec<f64> = ctx.tp.types.iter().map(|t| t.eta).collect();
    let prem: Vec<f64> = ctx.tp.types.iter().map(|t| t.wage_premium).collect();
    let realized: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (kappa, xbar) = inflow_curvature(&realized, &eta, &prem);

    let di = (m.district_id - 1) as usize;
    let outside_muni = OUTSIDE_MUNI_BASE + m.district_id;
    let gamma_w = ctx.tp.gamma_w;
    let id_base = (idx as u64 + 1) * ID_STRIDE;
    let mut records = Vec::new();
    let mut j: u64 = 0;
    let mut pool = Vec::new();

    for (k, &n_k) in counts.iter().enumerate() {
        let tk = &ctx.tp.types[k];
        let q_k = kappa * (tk.wage_premium - xbar);
        let size_n = (f.nonemp_pool * n_k as f64).ceil() as u32;
        let size_o = (f.outside_pool * n_k as f64).ceil() as u32;
        let groups = [(Kind::Incumbent, n_k), (Kind::NonEmpPool, size_n), (Kind::OutsidePool, size_o)];
        for (kind, size) in groups {
            let ratio = if size > 0 { n_k as f64 / size as f64 } else { 0.0 };
            for _ in 0..size {
                let worker_id = id_base + j;
                j += 1;
                if kind == Kind::NonEmpPool {
                    pool.push(worker_id);
                }
                let (u, v, wdraw, zsw): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
                let age0 = rng.random_range(demo.age_min..=demo.age_max);
                let female = rng.random::<f64>() < demo.female_share;
                let education = if rng.random::<f64>() < demo.education_link {
                    EDUCATION[k.min(2)]
                } else {
                    EDUCATION[rng.random_range(0..3)]
                };
                let hu: f64 = rng.random();
                let hours = if hu < cfg.hours_mix[0] {
                    HOURS[0]
                } else if hu < cfg.hours_mix[0] + cfg.hours_mix[1] {
                    HOURS[1]
                } else {
                    HOURS[2]
                };
                let nz: f64 = rng.sample(StandardNormal);
                let nu = w.sigma_theta * nz;
                let routine = rng.random::<f64>() < cfg.task_mix.routine_prob[k];
                let occ0 = ctx.draw_occupation(routine, &mut rng);
                let occ_alt = ctx.draw_occupation(!routine, &mut rng);

                for t in cfg.years() {
                    let ez: f64 = rng.sample(StandardNormal);
                    let h = t - base;
                    let yi = ctx.yi(t);
                    let i_t = shock.intensity(t, base);
                    let g = gamma_w * i_t;
                    let status = match (kind, h.signum()) {
                        (Kind::Incumbent, -1) => {
                            let (e0, l0) = (ctx.e0(-h), ctx.l0(-h));
                            if v < e0 {
                                Status::NonEmployed
                            } else if v < e0 + l0 {
                                Status::Outside
                            } else {
                                Status::Here
                            }
                        }
                        (Kind::Incumbent, 0) => Status::Here,
                        (Kind::Incumbent, _) => {
                            let pe = (ctx.e0(h) - tk.displacement * g).clamp(0.0, 1.0);
                            let pl = (ctx.l0(h) + tk.relocation * g).clamp(0.0, 1.0 - pe);
                            if u < pe {
                                Status::NonEmployed
                            } else if u < pe + pl {
                                Status::Outside
                            } else {
                                Status::Here
                            }
                        }
                        (Kind::NonEmpPool, -1) => {
                            if v < ctx.e0(-h) * ratio {
                                Status::Here
                            } else {
                                Status::NonEmployed
                            }
                        }
                        (Kind::OutsidePool, -1) => {
                            if v < ctx.l0(-h) * ratio {
                                Status::Here
                            } else {
                                Status::Outside
                            }
                        }
                        (Kind::NonEmpPool, 0) => Status::NonEmployed,
                        (Kind::OutsidePool, 0) => Status::Outside,
                        (pool, _) => {
                            let inflow = ctx.e0(h) + ctx.l0(h) + tk.crowding_out * g + q_k * g * g + ctx.ds.inflow[di][yi];
                            let share = if pool == Kind::NonEmpPool { f.nonemp_inflow_share } else { 1.0 - f.nonemp_inflow_share };
                            let pin = (share * inflow * ratio).clamp(0.0, 1.0);
                            if wdraw < pin {
                                Status::Here
                            } else if pool == Kind::OutsidePool {
                                Status::Outside
                            } else if wdraw < pin + f.other_job_base + f.other_job_slope * h as f64 {
                                Status::Outside
                            } else {
                                Status::NonEmployed
                            }
                        }
                    };
                    if status == Status::NonEmployed {
                        continue;
                    }
                    let age = (age0 as i32 + h) as u8;
                    let a = age as f64 - 40.0;
                    let mut lw = w.base_level
                        + w.trend * h as f64
                        + tk.wage_premium
                        + nu
                        + w.age_linear * a
                        + w.age_quadratic * a * a
                        + w.sigma_e * ez
                        + ctx.ds.wage[di][yi];
                    let muni = if status == Status::Here {
                        let mult = if kind == Kind::NonEmpPool { f.reentry_wage_mult } else { 1.0 };
                        lw += f_r + mult * g;
                        m.muni_id
                    } else {
                        outside_muni
                    };
                    let (lw, censored) = ctx.censor(lw, t);
                    let occ = if h > 0 && zsw < cfg.task_mix.switch_rate * h as f64 { occ_alt } else { occ0 };
                    records.push(SpellRecord {
                        worker_id,
                        year: t,
                        employed: true,
                        muni_id: Some(muni),
                        district_id: Some(m.district_id),
                        occupation_code: Some(occ),
                        task_class: Some(ctx.task_class(occ)),
                        log_daily_wage: Some(lw),
                        censored,
                        hours_band: Some(hours),
                        age,
                        female,
                        education,
                        apprentice: false,
                        nationality: Nationality::Native,
                    });
                }
            }
        }
    }

    // Apprentices hold one-year spells; their count responds to the shock.
    for t in cfg.years() {
        let n = if t == base {
            apprentices0
        } else {
            let i_t = shock.intensity(t, base);
            poisson(demo.apprentice_rate * m.n_workers0 as f64 * (1.0 + demo.apprentice_response * i_t), &mut rng)
        };
        for a in 0..n {
            let ez: f64 = rng.sample(StandardNormal);
            let age = rng.random_range(16..=19u8);
            let female = rng.random::<f64>() < demo.female_share;
            let yi = ctx.yi(t);
            let lw = w.base_level + w.apprentice_offset + w.trend * (t - base) as f64 + f_r + w.sigma_e * ez + ctx.ds.wage[di][yi];
            let (lw, censored) = ctx.censor(lw, t);
            records.push(SpellRecord {
                worker_id: id_base + APPRENTICE_ID_OFFSET + yi as u64 * 10_000 + a as u64,
                year: t,
                employed: true,
                muni_id: Some(m.muni_id),
                district_id: Some(m.district_id),
                occupation_code: None,
                task_class: None,
                log_daily_wage: Some(lw),
                censored,
                hours_band: Some(HoursBand::FullTime),
                age,
                female,
                education: Education::None,
                apprentice: true,
                nationality: Nationality::Native,
            });
        }
    }
    MuniOutput { records, shock, pool }
}

/// Commuters earn `c` times the border-region mean base-year wage level
/// in the year the inflow is complete.
fn simulate_commuters(cfg: &SimConfig, idx: usize, m: &MunicipalitySpec, shock: &ShockPath, log_level: f64) -> Vec<SpellRecord> {
    let mut rng: ChaCha8Rng = substream(cfg.seed, Domain::Commuter, m.muni_id as u64);
    let w = &cfg.wages;
    let base = cfg.base_year;
    let id_base = (idx as u64 + 1) * ID_STRIDE + COMMUTER_ID_OFFSET;
    let mean_log = log_level - 0.5 * w.sigma_e * w.sigma_e;
    let mut out = Vec::new();
    for j in 0..shock.commuters_full {
        let age0 = rng.random_range(cfg.demographics.age_min..=cfg.demographics.age_max);
        let female = rng.random::<f64>() < cfg.demographics.female_share;
        for t in cfg.years() {
            let ez: f64 = rng.sample(StandardNormal);
            let present = t >= base + 2 || (t == base + 1 && j < shock.commuters_first);
            if !present {
                continue;
            }
            let lw = mean_log + w.trend * (t - base - 2) as f64 + w.sigma_e * ez;
            let limit = w.censor_limit + w.censor_trend * (t - base) as f64;
            out.push(SpellRecord {
                worker_id: id_base + j as u64,
                year: t,
                employed: true,
                muni_id: Some(m.muni_id),
                district_id: Some(m.district_id),
                occupation_code: None,
                task_class: None,
                log_daily_wage: Some(lw.min(limit)),
                censored: lw > limit,
                hours_band: Some(HoursBand::FullTime),
                age: (age0 as i32 + t - base) as u8,
                female,
                education: Education::Apprenticeship,
                apprentice: false,
                nationality: Nationality::Commuter,
            });
        }
    }
    out
}

pub fn task_survey(cfg: &SimConfig) -> Vec<TaskSurveyRow> {
    let t = &cfg.task_mix;
    let mut rng = substream(cfg.seed, Domain::Survey, 0);
    let mut rows = Vec::new();
    for occ in 1..=t.n_occupations {
        let (lo, hi) = if occ <= t.n_routine_occupations { t.routine_intensity } else { t.abstract_intensity };
        let intensity = lo + (hi - lo) * rng.random::<f64>();
        for i in 0..t.survey_per_occupation {
            let n = rng.random_range(1..=t.max_survey_tasks);
            let n_abs = (0..n).filter(|_| rng.random::<f64>() < intensity).count() as u32;
            rows.push(TaskSurveyRow {
                occupation_code: occ,
                individual_id: occ as u64 * 1000 + i as u64,
                n_routine_tasks: n - n_abs,
                n_abstract_tasks: n_abs,
            });
        }
    }
    rows
}

/// Generates a full synthetic panel. Output is identical for a given
/// configuration regardless of the number of threads.
pub fn simulate_panel(cfg: &SimConfig) -> Result<SimOutput, PanelError> {
    cfg.validate()?;
    let truth = ground_truth(cfg)?;
    let tp = type_params(cfg).map_err(|e| PanelError::Config(e.to_string()))?;
    let ds = district_shocks(cfg);
    let munis = layout(cfg);
    let ctx = Ctx { cfg, tp: &tp, ds: &ds };
    let per_muni: Vec<MuniOutput> =
        munis.par_iter().enumerate().map(|(i, m)| simulate_municipality(&ctx, i, m)).collect();

    let border: std::collections::HashSet<u32> =
        munis.iter().filter(|m| m.is_border).map(|m| m.muni_id).collect();
    let use_all = border.is_empty();
    let (mut sum, mut n) = (0.0, 0usize);
    for mo in &per_muni {
        for r in &mo.records {
            if r.year == cfg.base_year && (use_all || r.muni_id.is_some_and(|m| border.contains(&m))) {
                sum += r.log_daily_wage.unwrap().exp();
                n += 1;
            }
        }
    }
    let log_level = (cfg.commuter_c * sum / n.max(1) as f64).ln();
    let commuters: Vec<Vec<SpellRecord>> = munis
        .par_iter()
        .enumerate()
        .map(|(i, m)| simulate_commuters(cfg, i, m, &per_muni[i].shock, log_level))
        .collect();

    let total = per_muni.iter().map(|m| m.records.len()).sum::<usize>() + commuters.iter().map(Vec::len).sum::<usize>();
    let mut spells = Vec::with_capacity(total);
    let mut shocks = Vec::with_capacity(munis.len());
    let mut nonemployed_pool = Vec::new();
    for (mo, c) in per_muni.into_iter().zip(commuters) {
        nonemployed_pool.extend(mo.pool);
        spells.extend(mo.records);
        spells.extend(c);
        shocks.push(mo.shock);
    }
    Ok(SimOutput { spells, municipalities: munis, shocks, survey: task_survey(cfg), truth, nonemployed_pool })
}
