//! Study inputs: the imputed panel, municipality attributes, and shocks
//! measured from commuter records.

use std::collections::{BTreeMap, HashSet};

use flowdecomp_core::econometrics::BootstrapConfig;
use flowdecomp_core::structural::ShockTotals;
use flowdecomp_panel::paneldata::{
    impute_censored, ImputationReport, ImputeMode, MunicipalityInfo, Nationality, OccupationTable, PanelIndex,
    SpellRecord,
};

use crate::StudyError;

/// Base and end year of a comparison, and the year the shock is complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub base_year: i32,
    pub end_year: i32,
    pub shock_year: i32,
}

impl Window {
    pub fn new(base_year: i32, end_year: i32) -> Self {
        Self { base_year, end_year, shock_year: base_year + 2 }
    }
}

impl Default for Window {
    fn default() -> Self {
        Self::new(1990, 1993)
    }
}

/// Estimation settings shared by all studies.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StudyOptions {
    /// Wild cluster bootstrap inference; analytic cluster-robust SEs when `None`.
    pub bootstrap: Option<BootstrapConfig>,
}

/// Head-count shock of one municipality.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MuniShock {
    /// Everyone employed in the municipality in the base year.
    pub total_heads0: f64,
    /// Commuter head counts by year offset from the base year, 0..=2.
    pub commuters: [f64; 3],
}

impl MuniShock {
    /// (C_{base+k} − C_base) / Total_base.
    pub fn delta(&self, k: usize) -> f64 {
        if self.total_heads0 > 0.0 {
            (self.commuters[k] - self.commuters[0]) / self.total_heads0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyData {
    pub index: PanelIndex,
    pub munis: BTreeMap<u32, MunicipalityInfo>,
    pub shocks: BTreeMap<u32, MuniShock>,
    /// Border-region totals for the shock ratio, from recorded wages.
    pub shock_totals: ShockTotals,
    pub base_year: i32,
    pub occupations: Option<OccupationTable>,
    pub imputation: ImputationReport,
}

impl StudyData {
    /// Measures shocks and wage bills from the records as given, then
    /// replaces censored wages by their conditional means.
    pub fn new(
        mut records: Vec<SpellRecord>,
        munis: &[MunicipalityInfo],
        base_year: i32,
        occupations: Option<OccupationTable>,
    ) -> Result<Self, StudyError> {
        let munis: BTreeMap<u32, MunicipalityInfo> = munis.iter().map(|m| (m.muni_id, m.clone())).collect();
        if munis.is_empty() {
            return Err(StudyError::Empty("no municipalities".into()));
        }
        let border: HashSet<u32> = munis.values().filter(|m| m.is_border).map(|m| m.muni_id).collect();
        let mut shocks: BTreeMap<u32, MuniShock> = munis.keys().map(|&m| (m, MuniShock::default())).collect();
        let mut totals = ShockTotals::default();
        for r in &records {
            let (Some(m), true) = (r.muni_id, r.employed) else { continue };
            let Some(s) = shocks.get_mut(&m) else { continue };
            let k = r.year - base_year;
            let commuter = r.nationality == Nationality::Commuter;
            if k == 0 {
                s.total_heads0 += 1.0;
            }
            if commuter && (0..=2).contains(&k) {
                s.commuters[k as usize] += 1.0;
            }
            if border.contains(&m) {
                let level = r.log_daily_wage.map(f64::exp).unwrap_or(0.0);
                if k == 0 {
                    totals.total_heads0 += 1.0;
                    totals.total_wage_bill0 += level;
                    if commuter {
                        totals.commuter_heads0 += 1.0;
                        totals.commuter_wage_bill0 += level;
                    }
                } else if k == 2 && commuter {
                    totals.commuter_heads1 += 1.0;
                    totals.commuter_wage_bill1 += level;
                }
            }
        }
        let imputation = impute_censored(&mut records, ImputeMode::ConditionalMean)?;
        Ok(Self {
            index: PanelIndex::new(records),
            munis,
            shocks,
            shock_totals: totals,
            base_year,
            occupations,
            imputation,
        })
    }

    pub fn regions(&self) -> HashSet<u32> {
        self.munis.keys().copied().collect()
    }

    /// The full shock ΔI_r for the window.
    pub fn shock(&self, muni: u32, window: &Window) -> Option<f64> {
        let k = (window.shock_year - self.base_year).clamp(0, 2) as usize;
        self.shocks.get(&muni).map(|s| s.delta(k))
    }

    /// Excluded instruments: border, border·d/100, border·(d/100)².
    pub fn instruments(&self, muni: u32) -> [f64; 3] {
        match self.munis.get(&muni) {
            Some(m) if m.is_border => {
                let d = m.distance_km.unwrap_or(0.0) / 100.0;
                [1.0, d, d * d]
            }
            _ => [0.0; 3],
        }
    }

    pub fn district(&self, muni: u32) -> u64 {
        self.munis.get(&muni).map(|m| m.district_id as u64).unwrap_or(u64::MAX)
    }
}
