//! Run configuration: `key = value` files with `[section]` headers.
//!
//! Keys in `[run]` (or before any section) set run options. Keys in `[sim]`
//! go to the simulator verbatim; keys in any other section `[s]` go to the
//! simulator as `s.key`, so `[flows] displacement = 0.7` sets
//! `flows.displacement`.

use std::path::{Path, PathBuf};

use flowdecomp_panel::synthpanel::SimConfig;

use crate::CliError;

pub const DEFAULT_BOOTSTRAP_REPS: usize = 500;
pub const DEFAULT_REPLICATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Study {
    Employment,
    Wages,
    Routine,
    Subgroups,
    PseudoPanel,
    Structural,
    EventStudy,
}

impl Study {
    pub const ALL: [Study; 7] = [
        Study::Employment,
        Study::Wages,
        Study::Routine,
        Study::Subgroups,
        Study::PseudoPanel,
        Study::Structural,
        Study::EventStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Study::Employment => "employment",
            Study::Wages => "wages",
            Study::Routine => "routine",
            Study::Subgroups => "subgroups",
            Study::PseudoPanel => "pseudo-panel",
            Study::Structural => "structural",
            Study::EventStudy => "event-study",
        }
    }

    /// Parses a comma-separated list; `all` selects every study.
    pub fn parse_list(s: &str) -> Result<Vec<Study>, CliError> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Study::ALL);
                continue;
            }
            let st = Study::ALL
                .into_iter()
                .find(|x| x.name() == part)
                .ok_or_else(|| CliError::Usage(format!("unknown study {part:?}")))?;
            out.push(st);
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(CliError::Usage("no study selected".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    /// Directory holding spells.csv, municipalities.csv and tasks.csv.
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub base_year: i32,
    pub end_year: i32,
    /// Bootstrap replications; 0 uses analytic cluster-robust errors.
    pub bootstrap_reps: usize,
    pub bootstrap_seed: u64,
    pub studies: Vec<Study>,
    /// Monte Carlo replications for `validate`.
    pub replications: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            data_dir: None,
            out_dir: PathBuf::from("out"),
            base_year: 1990,
            end_year: 1993,
            bootstrap_reps: DEFAULT_BOOTSTRAP_REPS,
            bootstrap_seed: 1,
            studies: Study::ALL.to_vec(),
            replications: DEFAULT_REPLICATIONS,
        }
    }
}

fn parse<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config { line, message: format!("{key}: cannot parse {value:?}") })
}

impl RunConfig {
    /// The data directory, defaulting to the output directory.
    pub fn data_dir(&self) -> &Path {
        self.data_dir.as_deref().unwrap_or(&self.out_dir)
    }

    fn set_run(&mut self, line: usize, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "data" | "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "out" | "out_dir" => self.out_dir = PathBuf::from(value),
            "base_year" => self.base_year = parse(line, key, value)?,
            "end_year" => self.end_year = parse(line, key, value)?,
            "reps" | "bootstrap_reps" => self.bootstrap_reps = parse(line, key, value)?,
            "seed" => {
                let s: u64 = parse(line, key, value)?;
                self.sim.seed = s;
                self.bootstrap_seed = s;
            }
            "bootstrap_seed" => self.bootstrap_seed = parse(line, key, value)?,
            "study" | "studies" => self.studies = Study::parse_list(value)?,
            "replications" => self.replications = parse(line, key, value)?,
            _ => return Err(CliError::Config { line, message: format!("unknown run setting {key:?}") }),
        }
        Ok(())
    }

    /// Applies a configuration text on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut section = String::from("run");
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config { line, message: format!("expected key = value, found {s:?}") })?;
            let (key, value) = (key.trim(), value.trim());
            match section.as_str() {
                "run" => self.set_run(line, key, value)?,
                "sim" => self.sim.set(key, value).map_err(|e| CliError::Config { line, message: e.to_string() })?,
                other => self
                    .sim
                    .set(&format!("{other}.{key}"), value)
                    .map_err(|e| CliError::Config { line, message: e.to_string() })?,
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_route_keys() {
        let mut c = RunConfig::default();
        c.apply_text("reps = 99\n[flows]\ndisplacement = 0.7 # comment\n[sim]\nlayout.n_border = 10\n[run]\nend_year = 1995\n")
            .unwrap();
        assert_eq!(c.bootstrap_reps, 99);
        assert_eq!(c.sim.flows.displacement, 0.7);
        assert_eq!(c.sim.layout.n_border, 10);
        assert_eq!(c.end_year, 1995);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut c = RunConfig::default();
        assert!(matches!(c.apply_text("\n\nnonsense\n"), Err(CliError::Config { line: 3, .. })));
        assert!(matches!(c.apply_text("[flows]\nnope = 1\n"), Err(CliError::Config { line: 2, .. })));
    }

    #[test]
    fn study_lists() {
        assert_eq!(Study::parse_list("all").unwrap().len(), 7);
        assert_eq!(Study::parse_list("wages,employment").unwrap(), vec![Study::Employment, Study::Wages]);
        assert!(Study::parse_list("").is_err());
        assert!(Study::parse_list("tables").is_err());
    }
}
