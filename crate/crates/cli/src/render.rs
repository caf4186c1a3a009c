//! Tables as aligned text and CSV.

use std::fmt::Write as _;

use flowdecomp_core::econometrics::RegressionResult;
use flowdecomp_studies::{Component, DecompositionReport, EventStudy, SHOCK};

use crate::CliError;

pub const CSV_HEADER: [&str; 8] = ["component", "sign", "coefficient", "se", "ci_low", "ci_high", "n", "clusters"];
pub const EVENT_HEADER: [&str; 7] = ["year", "coefficient", "se", "ci_low", "ci_high", "n", "clusters"];

/// One estimate. Plain numbers (structural parameters, residuals) leave
/// the inference fields empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub component: String,
    pub sign: String,
    pub coefficient: f64,
    pub se: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub n: Option<usize>,
    pub clusters: Option<usize>,
}

impl Row {
    pub fn value(name: &str, v: f64) -> Self {
        Row { component: name.into(), sign: String::new(), coefficient: v, se: None, ci: None, n: None, clusters: None }
    }

    pub fn regression(name: &str, sign: &str, r: &RegressionResult, coef: &str) -> Self {
        Row {
            component: name.into(),
            sign: sign.into(),
            coefficient: r.coef(coef),
            se: Some(r.se(coef)),
            ci: Some(r.ci(coef)),
            n: Some(r.n_obs),
            clusters: Some(r.n_clusters),
        }
    }

    fn from_component(c: &Component) -> Self {
        Self::regression(&c.name, c.sign.map_or("", |s| s.symbol()), &c.result, SHOCK)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub rows: Vec<Row>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn decomposition(title: &str, r: &DecompositionReport) -> Self {
        let mut rows: Vec<Row> = std::iter::once(&r.total).chain(&r.components).map(Row::from_component).collect();
        rows.push(Row::value("additivity_residual", r.additivity_residual));
        rows.extend(r.extras.iter().map(Row::from_component));
        if !r.excluded.is_empty() {
            rows.push(Row::value("excluded_municipalities", r.excluded.len() as f64));
        }
        Table { title: title.into(), rows, notes: vec![] }
    }

    /// Columns are components; signs go into the headers.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.title);
        let label = 12;
        let width = self
            .rows
            .iter()
            .filter(|r| r.se.is_some())
            .flat_map(|r| [header(r).len(), r.ci.map_or(0, |(a, b)| format!("[{a:.3}, {b:.3}]").len())])
            .max()
            .unwrap_or(0)
            .max(12)
            + 2;
        let line = |s: &mut String, name: &str, cells: Vec<String>| {
            let _ = write!(s, "{name:<label$}");
            for c in cells {
                let _ = write!(s, "{c:>width$}");
            }
            s.push('\n');
        };
        let (regressions, values): (Vec<&Row>, Vec<&Row>) = self.rows.iter().partition(|r| r.se.is_some());
        if !regressions.is_empty() {
            line(&mut s, "", regressions.iter().map(|r| header(r)).collect());
            line(&mut s, "coefficient", regressions.iter().map(|r| format!("{:.4}", r.coefficient)).collect());
            line(&mut s, "se", regressions.iter().map(|r| format!("({:.4})", r.se.unwrap())).collect());
            line(
                &mut s,
                "95% ci",
                regressions
                    .iter()
                    .map(|r| r.ci.map_or(String::new(), |(a, b)| format!("[{a:.3}, {b:.3}]")))
                    .collect(),
            );
            line(&mut s, "n", regressions.iter().map(|r| r.n.map_or(String::new(), |n| n.to_string())).collect());
            line(
                &mut s,
                "clusters",
                regressions.iter().map(|r| r.clusters.map_or(String::new(), |n| n.to_string())).collect(),
            );
        }
        let name_width = values.iter().map(|r| r.component.len() + 2).max().unwrap_or(0).max(label + width);
        for r in values {
            let v = if r.coefficient.fract() == 0.0 && r.coefficient.abs() < 1e15 {
                format!("{}", r.coefficient)
            } else if r.coefficient.abs() < 1e-4 {
                format!("{:.3e}", r.coefficient)
            } else {
                format!("{:.6}", r.coefficient)
            };
            let _ = writeln!(s, "{:<name_width$}{v}", r.component);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.component.clone(),
                r.sign.clone(),
                r.coefficient.to_string(),
                opt(r.se),
                opt(r.ci.map(|c| c.0)),
                opt(r.ci.map(|c| c.1)),
                opt(r.n),
                opt(r.clusters),
            ])
            .map_err(csv_err)?;
        }
        into_string(w)
    }
}

fn header(r: &Row) -> String {
    if r.sign.is_empty() {
        r.component.clone()
    } else {
        format!("{} ({})", r.component, r.sign)
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<Option<T>, CliError> {
    let s = rec.get(i).unwrap_or("").trim();
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| CliError::Config { line, message: format!("column {}: cannot parse {s:?}", CSV_HEADER[i]) })
}

/// Parses a table CSV written by [`Table::to_csv`].
pub fn read_table_csv(text: &str) -> Result<Vec<Row>, CliError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(CliError::Config { line: 1, message: format!("unexpected header {header:?}") });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let lo: Option<f64> = field(&rec, 4, line)?;
        let hi: Option<f64> = field(&rec, 5, line)?;
        rows.push(Row {
            component: rec.get(0).unwrap_or("").to_string(),
            sign: rec.get(1).unwrap_or("").to_string(),
            coefficient: field(&rec, 2, line)?
                .ok_or(CliError::Config { line, message: "empty coefficient".into() })?,
            se: field(&rec, 3, line)?,
            ci: lo.zip(hi),
            n: field(&rec, 6, line)?,
            clusters: field(&rec, 7, line)?,
        });
    }
    Ok(rows)
}

/// Per-year event-study estimates as plot-ready CSV.
pub fn event_csv(es: &EventStudy) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(EVENT_HEADER).map_err(csv_err)?;
    for (year, r) in &es.by_year {
        let (lo, hi) = r.ci(SHOCK);
        w.write_record([
            year.to_string(),
            r.coef(SHOCK).to_string(),
            r.se(SHOCK).to_string(),
            lo.to_string(),
            hi.to_string(),
            r.n_obs.to_string(),
            r.n_clusters.to_string(),
        ])
        .map_err(csv_err)?;
    }
    into_string(w)
}

pub fn event_text(studies: &[EventStudy]) -> String {
    let mut s = String::new();
    for es in studies {
        let _ = writeln!(s, "Event study: {}", es.outcome.name());
        let _ = writeln!(s, "{:>6}{:>12}{:>12}{:>22}", "year", "coefficient", "se", "95% ci");
        for (year, r) in &es.by_year {
            let (lo, hi) = r.ci(SHOCK);
            let ci = format!("[{lo:.3}, {hi:.3}]");
            let _ = writeln!(s, "{year:>6}{:>12.4}{:>12}{ci:>22}", r.coef(SHOCK), format!("({:.4})", r.se(SHOCK)));
        }
        if !es.skipped.is_empty() {
            let years: Vec<String> = es.skipped.iter().map(i32::to_string).collect();
            let _ = writeln!(s, "note: no data for {}", years.join(", "));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        Table {
            title: "t".into(),
            rows: vec![
                Row {
                    component: "employment".into(),
                    sign: String::new(),
                    coefficient: -0.873_141_592_653_589_7,
                    se: Some(0.1),
                    ci: Some((-1.1, -0.6)),
                    n: Some(10),
                    clusters: Some(4),
                },
                Row {
                    component: "displacement".into(),
                    sign: "-".into(),
                    coefficient: 0.14,
                    se: Some(0.02),
                    ci: Some((0.1, 0.18)),
                    n: Some(10),
                    clusters: Some(4),
                },
                Row::value("additivity_residual", 1.5e-17),
            ],
            notes: vec![],
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        assert_eq!(read_table_csv(&t.to_csv().unwrap()).unwrap(), t.rows);
    }

    #[test]
    fn signs_in_headers() {
        let text = sample().to_text();
        assert!(text.contains("displacement (-)"));
        assert!(text.contains("-0.8731"));
        assert!(text.contains("additivity_residual"));
    }
}
