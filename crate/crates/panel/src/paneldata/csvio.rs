//! CSV formats for spells, municipalities and the task survey.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::occupations::TaskSurveyRow;
use super::records::{MunicipalityInfo, SpellRecord};
use super::PanelError;

pub const SPELL_HEADER: [&str; 15] = [
    "worker_id",
    "year",
    "employed",
    "muni_id",
    "district_id",
    "occupation_code",
    "task_class",
    "log_daily_wage",
    "censored",
    "hours_band",
    "age",
    "female",
    "education",
    "apprentice",
    "nationality",
];
pub const MUNICIPALITY_HEADER: [&str; 4] = ["muni_id", "district_id", "is_border", "distance_km"];
pub const SURVEY_HEADER: [&str; 4] = ["occupation_code", "individual_id", "n_routine_tasks", "n_abstract_tasks"];

pub const MIN_AGE: u8 = 16;
pub const MAX_AGE: u8 = 65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub rows_read: usize,
    pub dropped_age: usize,
    pub kept: usize,
}

fn open(path: &Path) -> Result<File, PanelError> {
    File::open(path).map_err(|e| PanelError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn create(path: &Path) -> Result<File, PanelError> {
    File::create(path).map_err(|e| PanelError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn io_err(e: impl std::fmt::Display) -> PanelError {
    PanelError::Io { path: String::new(), message: e.to_string() }
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<(), PanelError> {
    let header = rdr.headers().map_err(|e| PanelError::Schema { line: 1, message: e.to_string() })?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(PanelError::Schema { line: 1, message: format!("expected header {expected:?}, found {got:?}") });
    }
    Ok(())
}

struct Fields<'a> {
    rec: &'a csv::StringRecord,
    header: &'a [&'a str],
}

impl Fields<'_> {
    fn raw(&self, i: usize) -> &str {
        self.rec.get(i).unwrap_or("").trim()
    }

    fn opt<T: FromStr>(&self, i: usize) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.raw(i);
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<T>().map(Some).map_err(|e| format!("column {}: {e} ({s:?})", self.header[i]))
    }

    fn req<T: FromStr>(&self, i: usize) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        self.opt(i)?.ok_or_else(|| format!("column {} is empty", self.header[i]))
    }

    fn flag(&self, i: usize) -> Result<bool, String> {
        match self.raw(i) {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            s => Err(format!("column {}: expected 0/1, found {s:?}", self.header[i])),
        }
    }
}

fn parse_spell(f: &Fields<'_>) -> Result<SpellRecord, String> {
    if f.rec.len() != SPELL_HEADER.len() {
        return Err(format!("expected {} fields, found {}", SPELL_HEADER.len(), f.rec.len()));
    }
    let rec = SpellRecord {
        worker_id: f.req(0)?,
        year: f.req(1)?,
        employed: f.flag(2)?,
        muni_id: f.opt(3)?,
        district_id: f.opt(4)?,
        occupation_code: f.opt(5)?,
        task_class: f.opt(6)?,
        log_daily_wage: f.opt(7)?,
        censored: f.flag(8)?,
        hours_band: f.opt(9)?,
        age: f.req(10)?,
        female: f.flag(11)?,
        education: f.req(12)?,
        apprentice: f.flag(13)?,
        nationality: f.req(14)?,
    };
    rec.validate()?;
    Ok(rec)
}

/// Parses spells from any reader; applies the age window and rejects
/// duplicate (worker, year) pairs.
pub fn read_spells(reader: impl Read) -> Result<(Vec<SpellRecord>, LoadReport), PanelError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    check_header(&mut rdr, &SPELL_HEADER)?;
    let mut out = Vec::new();
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    let mut raw = csv::StringRecord::new();
    let mut line = 1usize;
    loop {
        line += 1;
        match rdr.read_record(&mut raw) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(PanelError::Schema { line, message: e.to_string() }),
        }
        report.rows_read += 1;
        let rec = parse_spell(&Fields { rec: &raw, header: &SPELL_HEADER })
            .map_err(|message| PanelError::Schema { line, message })?;
        if rec.age < MIN_AGE || rec.age > MAX_AGE {
            report.dropped_age += 1;
            continue;
        }
        if !seen.insert((rec.worker_id, rec.year)) {
            return Err(PanelError::Duplicate { worker_id: rec.worker_id, year: rec.year });
        }
        out.push(rec);
    }
    report.kept = out.len();
    Ok((out, report))
}

pub fn load_spells(path: &Path) -> Result<(Vec<SpellRecord>, LoadReport), PanelError> {
    read_spells(open(path)?)
}

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes spells in the canonical column order. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_spells(writer: impl Write, records: &[SpellRecord]) -> Result<(), PanelError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SPELL_HEADER).map_err(io_err)?;
    for r in records {
        w.write_record([
            r.worker_id.to_string(),
            r.year.to_string(),
            flag(r.employed).to_string(),
            opt_str(r.muni_id),
            opt_str(r.district_id),
            opt_str(r.occupation_code),
            opt_str(r.task_class),
            opt_str(r.log_daily_wage),
            flag(r.censored).to_string(),
            opt_str(r.hours_band),
            r.age.to_string(),
            flag(r.female).to_string(),
            r.education.to_string(),
            flag(r.apprentice).to_string(),
            r.nationality.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn save_spells(path: &Path, records: &[SpellRecord]) -> Result<(), PanelError> {
    write_spells(std::io::BufWriter::new(create(path)?), records)
}

pub fn read_municipalities(reader: impl Read) -> Result<Vec<MunicipalityInfo>, PanelError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    check_header(&mut rdr, &MUNICIPALITY_HEADER)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| PanelError::Schema { line, message: e.to_string() })?;
        let f = Fields { rec: &row, header: &MUNICIPALITY_HEADER };
        let parsed = (|| -> Result<MunicipalityInfo, String> {
            let m = MunicipalityInfo {
                muni_id: f.req(0)?,
                district_id: f.req(1)?,
                is_border: f.flag(2)?,
                distance_km: f.opt(3)?,
            };
            match (m.is_border, m.distance_km) {
                (true, None) => Err("border municipality without distance_km".into()),
                (_, Some(d)) if !(d >= 0.0) => Err(format!("negative distance_km {d}")),
                _ => Ok(m),
            }
        })()
        .map_err(|message| PanelError::Schema { line, message })?;
        if !seen.insert(parsed.muni_id) {
            return Err(PanelError::Schema { line, message: format!("duplicate muni_id {}", parsed.muni_id) });
        }
        out.push(parsed);
    }
    Ok(out)
}

pub fn load_municipalities(path: &Path) -> Result<Vec<MunicipalityInfo>, PanelError> {
    read_municipalities(open(path)?)
}

pub fn write_municipalities(writer: impl Write, munis: &[MunicipalityInfo]) -> Result<(), PanelError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MUNICIPALITY_HEADER).map_err(io_err)?;
    for m in munis {
        w.write_record([
            m.muni_id.to_string(),
            m.district_id.to_string(),
            flag(m.is_border).to_string(),
            opt_str(m.distance_km),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn save_municipalities(path: &Path, munis: &[MunicipalityInfo]) -> Result<(), PanelError> {
    write_municipalities(std::io::BufWriter::new(create(path)?), munis)
}

pub fn read_task_survey(reader: impl Read) -> Result<Vec<TaskSurveyRow>, PanelError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    check_header(&mut rdr, &SURVEY_HEADER)?;
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| PanelError::Schema { line, message: e.to_string() })?;
        let f = Fields { rec: &row, header: &SURVEY_HEADER };
        let parsed = (|| -> Result<TaskSurveyRow, String> {
            Ok(TaskSurveyRow {
                occupation_code: f.req(0)?,
                individual_id: f.req(1)?,
                n_routine_tasks: f.req(2)?,
                n_abstract_tasks: f.req(3)?,
            })
        })()
        .map_err(|message| PanelError::Schema { line, message })?;
        out.push(parsed);
    }
    Ok(out)
}

pub fn load_task_survey(path: &Path) -> Result<Vec<TaskSurveyRow>, PanelError> {
    read_task_survey(open(path)?)
}

pub fn write_task_survey(writer: impl Write, rows: &[TaskSurveyRow]) -> Result<(), PanelError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SURVEY_HEADER).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.occupation_code.to_string(),
            r.individual_id.to_string(),
            r.n_routine_tasks.to_string(),
            r.n_abstract_tasks.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn save_task_survey(path: &Path, rows: &[TaskSurveyRow]) -> Result<(), PanelError> {
    write_task_survey(std::io::BufWriter::new(create(path)?), rows)
}
