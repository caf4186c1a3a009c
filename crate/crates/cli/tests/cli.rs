use std::path::Path;
use std::process::{Command, Output};

use flowdecomp_cli::render::read_table_csv;
use flowdecomp_core::econometrics::BootstrapConfig;
use flowdecomp_panel::paneldata::{classify_occupations, load_municipalities, load_spells, load_task_survey};
use flowdecomp_studies::{decompose_employment, StudyData, StudyOptions, Window};

const SMALL: &str = "reps = 49\n[layout]\nn_border = 42\nn_control = 40\n";

fn flowdecomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowdecomp")).args(args).output().unwrap()
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.cfg");
    std::fs::write(&p, SMALL).unwrap();
    p.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn employment_table_matches_the_study() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().to_str().unwrap();
    let o = flowdecomp(&["simulate", "--config", &cfg, "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = flowdecomp(&["estimate", "--config", &cfg, "--out", out, "--study", "employment"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let text = std::fs::read_to_string(dir.path().join("employment.txt")).unwrap();
    for h in ["employment", "displacement (-)", "crowding_out (+)", "relocation (-)", "additivity_residual"] {
        assert!(text.contains(h), "missing {h} in\n{text}");
    }
    let rows = read_table_csv(&std::fs::read_to_string(dir.path().join("employment.csv")).unwrap()).unwrap();
    let signed: Vec<(&str, &str)> = rows.iter().map(|r| (r.component.as_str(), r.sign.as_str())).collect();
    assert_eq!(
        signed,
        vec![
            ("employment", ""),
            ("displacement", "-"),
            ("crowding_out", "+"),
            ("relocation", "-"),
            ("additivity_residual", "")
        ]
    );

    // Same estimates straight from the studies module on the written files.
    let (records, _) = load_spells(&dir.path().join("spells.csv")).unwrap();
    let munis = load_municipalities(&dir.path().join("municipalities.csv")).unwrap();
    let survey = load_task_survey(&dir.path().join("tasks.csv")).unwrap();
    let known: Vec<u32> = records.iter().filter_map(|r| r.occupation_code).collect();
    let occ = classify_occupations(&survey, &known);
    let data = StudyData::new(records, &munis, 1990, Some(occ)).unwrap();
    let opts = StudyOptions { bootstrap: Some(BootstrapConfig { reps: 49, seed: 1 }) };
    let r = decompose_employment(&data, &Window::default(), &opts).unwrap();
    let expect: Vec<_> = std::iter::once(&r.total).chain(&r.components).collect();
    for (row, c) in rows.iter().zip(expect) {
        assert_eq!(row.component, c.name);
        assert_eq!(row.coefficient, c.coef());
        assert_eq!(row.se, Some(c.se()));
        assert_eq!(row.ci, Some(c.ci()));
        assert_eq!(row.n, Some(c.result.n_obs));
        assert_eq!(row.clusters, Some(c.result.n_clusters));
    }
    assert_eq!(rows[4].coefficient, r.additivity_residual);

    let o = flowdecomp(&["report", "--out", out, "--study", "employment"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("beta_r") && report.contains("relocation"), "{report}");
}

#[test]
fn missing_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    let o = flowdecomp(&["estimate", "--data", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("spells.csv") && e.contains("not found"), "{e}");
}

#[test]
fn empty_study_list_is_a_usage_error() {
    let o = flowdecomp(&["estimate", "--study", ""]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("usage"), "{}", stderr(&o));
    let o = flowdecomp(&["estimate", "--study", "tables"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.cfg");
    std::fs::write(&p, "reps = 10\n[layout]\nn_border = many\n").unwrap();
    let o = flowdecomp(&["simulate", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn failing_study_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().to_str().unwrap();
    assert!(flowdecomp(&["simulate", "--config", &cfg, "--out", out]).status.success());
    // Blank every task class: no municipality has routine employment.
    let spells = dir.path().join("spells.csv");
    let text = std::fs::read_to_string(&spells).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let col = header.split(',').position(|h| h == "task_class").unwrap();
    let mut blanked = format!("{header}\n");
    for l in lines {
        let mut f: Vec<&str> = l.split(',').collect();
        f[col] = "";
        blanked.push_str(&f.join(","));
        blanked.push('\n');
    }
    std::fs::write(&spells, blanked).unwrap();
    let o = flowdecomp(&["estimate", "--config", &cfg, "--out", out, "--study", "routine"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("study routine"), "{}", stderr(&o));
}

#[test]
fn validate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = flowdecomp(&[
            "validate",
            "--seed",
            "7",
            "--replications",
            "3",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
        reports.push(std::fs::read(out.join("validate.txt")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert!(String::from_utf8_lossy(&reports[0]).contains("seeds 7..9"));
}
