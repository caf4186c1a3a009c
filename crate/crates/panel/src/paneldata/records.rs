use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HoursBand {
    FullTime,
    Part18to30,
    PartUnder18,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskClass {
    Routine,
    Abstract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Education {
    None,
    Apprenticeship,
    University,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nationality {
    Native,
    Commuter,
}

/// Full-time-equivalent weight of an hours band.
pub fn fte_weight(band: HoursBand) -> f64 {
    match band {
        HoursBand::FullTime => 1.0,
        HoursBand::Part18to30 => 0.67,
        HoursBand::PartUnder18 => 0.5,
    }
}

macro_rules! text_enum {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$variant => $text),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok(Self::$variant),)+
                    other => Err(format!("unknown {} value {other:?}", stringify!($ty))),
                }
            }
        }
    };
}

text_enum!(HoursBand { FullTime => "FullTime", Part18to30 => "Part18to30", PartUnder18 => "PartUnder18" });
text_enum!(TaskClass { Routine => "Routine", Abstract => "Abstract" });
text_enum!(Education { None => "None", Apprenticeship => "Apprenticeship", University => "University" });
text_enum!(Nationality { Native => "Native", Commuter => "Commuter" });

/// One worker-year observation at the annual reference date.
#[derive(Debug, Clone, PartialEq)]
pub struct SpellRecord {
    pub worker_id: u64,
    pub year: i32,
    pub employed: bool,
    pub muni_id: Option<u32>,
    pub district_id: Option<u32>,
    pub occupation_code: Option<u32>,
    pub task_class: Option<TaskClass>,
    pub log_daily_wage: Option<f64>,
    /// The wage is the censoring limit, not the true wage.
    pub censored: bool,
    pub hours_band: Option<HoursBand>,
    pub age: u8,
    pub female: bool,
    pub education: Education,
    pub apprentice: bool,
    pub nationality: Nationality,
}

impl SpellRecord {
    /// A non-employment observation carrying only demographics.
    pub fn nonemployed(worker_id: u64, year: i32, age: u8, female: bool, education: Education) -> Self {
        Self {
            worker_id,
            year,
            employed: false,
            muni_id: None,
            district_id: None,
            occupation_code: None,
            task_class: None,
            log_daily_wage: None,
            censored: false,
            hours_band: None,
            age,
            female,
            education,
            apprentice: false,
            nationality: Nationality::Native,
        }
    }

    pub fn fte(&self) -> f64 {
        match (self.employed, self.hours_band) {
            (true, Some(b)) => fte_weight(b),
            _ => 0.0,
        }
    }

    pub fn is_full_time(&self) -> bool {
        self.employed && self.hours_band == Some(HoursBand::FullTime)
    }

    /// Natives outside apprenticeship training: the population of every
    /// employment and wage analysis.
    pub fn in_native_sample(&self) -> bool {
        self.nationality == Nationality::Native && !self.apprentice
    }

    /// Checks the per-record schema invariants.
    pub fn validate(&self) -> Result<(), String> {
        if self.employed {
            if self.muni_id.is_none() {
                return Err("employed record without muni_id".into());
            }
            if self.log_daily_wage.is_none() {
                return Err("employed record without log_daily_wage".into());
            }
            if self.hours_band.is_none() {
                return Err("employed record without hours_band".into());
            }
            if let Some(w) = self.log_daily_wage {
                if !w.is_finite() {
                    return Err(format!("non-finite wage {w}"));
                }
            }
        } else {
            if self.muni_id.is_some() || self.log_daily_wage.is_some() {
                return Err("non-employed record with muni_id or wage".into());
            }
            if self.censored {
                return Err("non-employed record flagged censored".into());
            }
        }
        Ok(())
    }
}

/// Municipality attributes needed to build instruments and clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct MunicipalityInfo {
    pub muni_id: u32,
    pub district_id: u32,
    pub is_border: bool,
    /// Distance to the nearest border crossing; `None` for controls.
    pub distance_km: Option<f64>,
}
