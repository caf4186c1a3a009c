//! The four subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use flowdecomp_core::econometrics::{BootstrapConfig, ProbitResult, INTERCEPT};
use flowdecomp_core::structural::SelectionBounds;
use flowdecomp_panel::paneldata::{classify_occupations, load_municipalities, load_spells, load_task_survey};
use flowdecomp_panel::synthpanel::{
    simulate_panel, write_outputs, GroundTruth, MUNICIPALITIES_FILE, SPELLS_FILE, TASKS_FILE, TRUTH_FILE,
};
use flowdecomp_studies::first_stage::{DISTANCE, DISTANCE_SQ};
use flowdecomp_studies::{
    decompose_employment, decompose_routine, decompose_wages, event_study, first_stage, pseudo_panel,
    pure_wage_effect, structural_study, subgroup_study, EventOutcome, Grouping, StudyData, StudyOptions, Subgroup,
    Window, SHOCK,
};

use crate::config::{RunConfig, Study};
use crate::render::{event_csv, event_text, read_table_csv, Row, Table};
use crate::{in_study, montecarlo, CliError};

pub const REPORT_FILE: &str = "report.txt";
pub const VALIDATE_FILE: &str = "validate.txt";

/// A file to write under the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut paths = Vec::new();
    for a in artifacts {
        let p = dir.join(&a.name);
        fs::write(&p, &a.contents).map_err(io(&p))?;
        paths.push(p);
    }
    Ok(paths)
}

fn window(cfg: &RunConfig) -> Result<Window, CliError> {
    if cfg.end_year <= cfg.base_year {
        return Err(CliError::Usage(format!("end year {} is not after base year {}", cfg.end_year, cfg.base_year)));
    }
    Ok(Window::new(cfg.base_year, cfg.end_year))
}

fn options(cfg: &RunConfig) -> StudyOptions {
    StudyOptions {
        bootstrap: (cfg.bootstrap_reps > 0)
            .then_some(BootstrapConfig { reps: cfg.bootstrap_reps, seed: cfg.bootstrap_seed }),
    }
}

/// Simulates a panel and writes spells, municipalities, task survey and
/// ground truth to the output directory.
pub fn run_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = simulate_panel(&cfg.sim)?;
    write_outputs(&out, &cfg.out_dir)?;
    Ok([SPELLS_FILE, MUNICIPALITIES_FILE, TASKS_FILE, TRUTH_FILE].iter().map(|f| cfg.out_dir.join(f)).collect())
}

fn require(path: PathBuf) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Io(format!("{}: file not found", path.display())))
    }
}

/// Loads spells and municipalities from `dir`. The task survey is optional;
/// without it occupation-based studies fail.
pub fn load_data(dir: &Path, base_year: i32) -> Result<StudyData, CliError> {
    let (records, _) = load_spells(&require(dir.join(SPELLS_FILE))?)?;
    let munis = load_municipalities(&require(dir.join(MUNICIPALITIES_FILE))?)?;
    let tasks = dir.join(TASKS_FILE);
    let occupations = if tasks.is_file() {
        let survey = load_task_survey(&tasks)?;
        let known: Vec<u32> = records.iter().filter_map(|r| r.occupation_code).collect();
        Some(classify_occupations(&survey, &known))
    } else {
        None
    };
    StudyData::new(records, &munis, base_year, occupations).map_err(in_study("data"))
}

fn table_artifacts(stem: &str, table: &Table) -> Result<Vec<Artifact>, CliError> {
    Ok(vec![
        Artifact { name: format!("{stem}.csv"), contents: table.to_csv()? },
        Artifact { name: format!("{stem}.txt"), contents: table.to_text() },
    ])
}

fn count(name: &str, n: usize) -> Row {
    Row::value(name, n as f64)
}

fn probit_rows(p: &ProbitResult) -> Vec<Row> {
    ["a", "b"]
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (b, se) = (p.coefficients[j], p.se(j));
            Row {
                component: format!("stay_probit_{name}"),
                sign: String::new(),
                coefficient: b,
                se: Some(se),
                ci: Some((b - 1.96 * se, b + 1.96 * se)),
                n: None,
                clusters: None,
            }
        })
        .collect()
}

fn bounds_rows(prefix: &str, b: &SelectionBounds) -> Vec<Row> {
    [
        ("pi", b.pi),
        ("mills", b.mills),
        ("mills_derivative", b.dmills),
        ("bias_low", b.bias_low),
        ("bias_high", b.bias_high),
        ("marginal_stay_effect", b.marginal_stay_effect),
    ]
    .iter()
    .map(|(n, v)| Row::value(&format!("{prefix}_{n}"), *v))
    .collect()
}

/// Tables and CSVs for one study.
pub fn study_artifacts(data: &StudyData, cfg: &RunConfig, study: Study) -> Result<Vec<Artifact>, CliError> {
    let w = window(cfg)?;
    let opts = options(cfg);
    let name = study.name();
    let err = in_study(name);
    let span = format!("{}-{}", w.base_year, w.end_year);
    match study {
        Study::Employment => {
            let r = decompose_employment(data, &w, &opts).map_err(err)?;
            table_artifacts(name, &Table::decomposition(&format!("Employment decomposition, {span}"), &r))
        }
        Study::Wages => {
            let r = decompose_wages(data, &w, &opts).map_err(err)?;
            table_artifacts(name, &Table::decomposition(&format!("Wage decomposition, {span}"), &r))
        }
        Study::Routine => {
            let r = decompose_routine(data, &w, &opts).map_err(err)?;
            table_artifacts(name, &Table::decomposition(&format!("Routine employment decomposition, {span}"), &r))
        }
        Study::Subgroups => {
            let mut rows = Vec::new();
            for g in [Subgroup::NonEmployed, Subgroup::Age50Plus, Subgroup::Routine, Subgroup::Abstract] {
                let r = subgroup_study(data, &w, g, &opts).map_err(&err)?;
                let mut d = Row::regression(&format!("{}_displacement", g.name()), "", &r.displacement, SHOCK);
                d.coefficient = r.displacement_effect();
                if d.coefficient != r.displacement.coef(SHOCK) {
                    d.ci = d.ci.map(|(lo, hi)| (-hi, -lo));
                }
                rows.push(d);
                rows.push(Row::regression(&format!("{}_pure_wage", g.name()), "", &r.pure_wage, SHOCK));
                rows.push(count(&format!("{}_workers", g.name()), r.n_workers));
            }
            let table = Table { title: format!("Subgroup effects, {span}"), rows, notes: vec![] };
            table_artifacts(name, &table)
        }
        Study::PseudoPanel => {
            let pp = pseudo_panel(data, &w, Grouping::EducationAgeGender, &opts).map_err(&err)?;
            let regional = decompose_wages(data, &w, &opts).map_err(&err)?;
            let pure = pure_wage_effect(data, &w, &opts).map_err(&err)?;
            let rows = vec![
                Row::regression("regional", "", &regional.total.result, SHOCK),
                Row::regression("pseudo_panel", "", &pp.result, SHOCK),
                Row::regression("pure_wage", "", &pure, SHOCK),
                count("cells_used", pp.cells_used),
                count("cells_dropped", pp.cells_dropped),
            ];
            table_artifacts(name, &Table { title: format!("Wage effects by estimator, {span}"), rows, notes: vec![] })
        }
        Study::Structural => {
            let s = structural_study(data, &w, &opts).map_err(&err)?;
            let fs = first_stage(data, &w).map_err(&err)?;
            let rf = s.reduced_form;
            let mut rows = vec![
                Row::regression("first_stage_constant", "", &fs.result, INTERCEPT),
                Row::regression("first_stage_distance", "", &fs.result, DISTANCE),
                Row::regression("first_stage_distance_sq", "", &fs.result, DISTANCE_SQ),
            ];
            rows.extend(probit_rows(&s.probit));
            rows.extend([
                count("border_municipalities", fs.n_border),
                Row::value("beta_r", rf.beta_r),
                Row::value("gamma_r", rf.gamma_r),
                Row::value("gamma_w", rf.gamma_w),
                Row::value("c", rf.c),
                Row::value("eta_pop", s.params.eta_pop),
                Row::value("eta_eff", s.params.eta_eff),
                Row::value("phi", s.params.phi),
            ]);
            if let Some(c) = s.cautionary {
                rows.extend([
                    Row::value("regional_wage_eta_pop", c.eta_pop),
                    Row::value("regional_wage_eta_eff", c.eta_eff),
                    Row::value("regional_wage_phi", c.phi),
                ]);
            }
            rows.extend([
                Row::value("sigma_de", s.sigma_de),
                Row::value("stay_share", s.stay_share),
                Row::value("mean_shock", s.mean_shock),
            ]);
            rows.extend(bounds_rows("probit", &s.bounds_probit));
            rows.extend(bounds_rows("share", &s.bounds_share));
            let notes = if s.cautionary.is_none() {
                vec!["recovery with the regional wage effect is degenerate".to_string()]
            } else {
                vec![]
            };
            table_artifacts(name, &Table { title: format!("Structural parameters, {span}"), rows, notes })
        }
        Study::EventStudy => {
            let years: Vec<i32> = (w.base_year - 3..=w.base_year + 5).filter(|&y| y != w.base_year).collect();
            let mut studies = Vec::new();
            let mut out = Vec::new();
            for outcome in [
                EventOutcome::Employment,
                EventOutcome::RoutineEmployment,
                EventOutcome::AbstractEmployment,
                EventOutcome::AbstractShare,
                EventOutcome::Apprentices,
            ] {
                let es = event_study(data, &years, outcome, &opts).map_err(&err)?;
                out.push(Artifact { name: format!("event_{}.csv", outcome.name()), contents: event_csv(&es)? });
                studies.push(es);
            }
            out.push(Artifact { name: format!("{name}.txt"), contents: event_text(&studies) });
            Ok(out)
        }
    }
}

/// Runs the selected studies on the data directory and writes one CSV and
/// one text table per study (per outcome for the event study).
pub fn run_estimate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    window(cfg)?;
    let data = load_data(cfg.data_dir(), cfg.base_year)?;
    let mut artifacts = Vec::new();
    for &s in &cfg.studies {
        artifacts.extend(study_artifacts(&data, cfg, s)?);
    }
    write_artifacts(&cfg.out_dir, &artifacts)
}

/// (csv row, truth value) pairs compared by `report`.
const REPORT_MAP: [(&str, &str, &str); 10] = [
    ("employment", "employment", "beta_r"),
    ("employment", "displacement", "displacement"),
    ("employment", "crowding_out", "crowding_out"),
    ("employment", "relocation", "relocation"),
    ("wages", "regional_wage", "gamma_r"),
    ("wages", "pure_wage", "gamma_w"),
    ("structural", "c", "c"),
    ("structural", "eta_pop", "eta_pop"),
    ("structural", "eta_eff", "eta_eff"),
    ("structural", "phi", "phi"),
];

fn truth_value(t: &GroundTruth, key: &str) -> f64 {
    match key {
        "beta_r" => t.beta_r,
        "displacement" => t.displacement,
        "crowding_out" => t.crowding_out,
        "relocation" => t.relocation,
        "gamma_r" => t.gamma_r,
        "gamma_w" => t.gamma_w,
        "c" => t.c,
        "eta_pop" => t.eta_pop,
        "eta_eff" => t.eta_eff,
        "phi" => t.phi,
        _ => f64::NAN,
    }
}

/// Compares estimate CSVs in the output directory with the ground truth
/// written by `simulate`, and writes report.txt.
pub fn run_report(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let truth_path = require(cfg.data_dir().join(TRUTH_FILE))?;
    let truth = GroundTruth::parse(&fs::read_to_string(&truth_path).map_err(io(&truth_path))?)?;
    let mut lines = vec![format!(
        "{:<12}{:<14}{:>12}{:>12}{:>12}{:>10}",
        "study", "quantity", "estimate", "se", "truth", "z"
    )];
    let mut found = 0;
    for study in cfg.studies.iter().map(|s| s.name()) {
        let path = cfg.out_dir.join(format!("{study}.csv"));
        if !path.is_file() {
            continue;
        }
        found += 1;
        let rows = read_table_csv(&fs::read_to_string(&path).map_err(io(&path))?)?;
        for (s, component, key) in REPORT_MAP.iter().filter(|m| m.0 == study) {
            let Some(row) = rows.iter().find(|r| r.component == *component) else { continue };
            let t = truth_value(&truth, key);
            let (se, z) = match row.se {
                Some(se) => (format!("{se:.4}"), format!("{:.2}", (row.coefficient - t) / se)),
                None => (String::new(), String::new()),
            };
            lines.push(format!("{s:<12}{key:<14}{:>12.4}{se:>12}{t:>12.4}{z:>10}", row.coefficient));
        }
    }
    if found == 0 {
        return Err(CliError::Io(format!("no estimate CSVs in {}; run estimate first", cfg.out_dir.display())));
    }
    let contents = lines.join("\n") + "\n";
    write_artifacts(&cfg.out_dir, &[Artifact { name: REPORT_FILE.into(), contents }])
}

/// Simulates `cfg.replications` panels, compares mean estimates with the
/// ground truth and writes validate.txt. Fails if any check fails.
pub fn run_validate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let w = window(cfg)?;
    if cfg.replications < 2 {
        return Err(CliError::Usage("validate needs at least 2 replications".into()));
    }
    let truth = flowdecomp_panel::synthpanel::ground_truth(&cfg.sim)?;
    let reps = montecarlo::run(&cfg.sim, &w, cfg.replications)?;
    let checks = montecarlo::checks(&reps, &truth);
    let contents = montecarlo::render_checks(&checks, reps.len(), cfg.sim.seed);
    let paths = write_artifacts(&cfg.out_dir, &[Artifact { name: VALIDATE_FILE.into(), contents }])?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::ValidationFailed { failed });
    }
    Ok(paths)
}
