//! FTE-weighted employment flow accounts per municipality.

use std::collections::BTreeMap;

use super::records::TaskClass;
use super::transitions::{Classification, TransitionRecord};
use super::PanelError;

/// Flow accounts for one task class. Stayers who switch class appear as
/// upgrades (routine to abstract) or downgrades (abstract to routine).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassFlows {
    pub e_stay: f64,
    pub e_exit: f64,
    pub e_relocate: f64,
    pub e_inflow: f64,
    /// Stayers leaving this class for the other one.
    pub e_switch_out: f64,
    /// Stayers entering this class from the other one.
    pub e_switch_in: f64,
}

impl ClassFlows {
    pub fn e0(&self) -> f64 {
        self.e_stay + self.e_exit + self.e_relocate + self.e_switch_out
    }

    pub fn e1(&self) -> f64 {
        self.e_stay + self.e_inflow + self.e_switch_in
    }

    /// Signed component shares of base employment:
    /// (exit −, inflow +, relocate −, switch_out −, switch_in +).
    pub fn shares(&self) -> Option<[f64; 5]> {
        let e0 = self.e0();
        (e0 > 0.0).then(|| {
            [self.e_exit / e0, self.e_inflow / e0, self.e_relocate / e0, self.e_switch_out / e0, self.e_switch_in / e0]
        })
    }

    pub fn growth(&self) -> Option<f64> {
        let e0 = self.e0();
        (e0 > 0.0).then(|| (self.e1() - e0) / e0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaskFlows {
    pub routine: ClassFlows,
    pub abstract_: ClassFlows,
}

impl TaskFlows {
    pub fn class(&self, c: TaskClass) -> &ClassFlows {
        match c {
            TaskClass::Routine => &self.routine,
            TaskClass::Abstract => &self.abstract_,
        }
    }

    /// Individual upgrading, routine to abstract among stayers.
    pub fn upgrade(&self) -> f64 {
        self.routine.e_switch_out
    }

    pub fn downgrade(&self) -> f64 {
        self.routine.e_switch_in
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowAggregate {
    pub muni_id: u32,
    pub e0: f64,
    pub e1: f64,
    pub e_stay: f64,
    pub e_exit: f64,
    pub e_relocate: f64,
    pub e_inflow: f64,
    pub e_inflow_nonemp: f64,
    pub e_inflow_other: f64,
    pub tasks: Option<TaskFlows>,
}

impl FlowAggregate {
    pub fn growth(&self) -> f64 {
        (self.e1 - self.e0) / self.e0
    }

    pub fn exit_share(&self) -> f64 {
        self.e_exit / self.e0
    }

    pub fn inflow_share(&self) -> f64 {
        self.e_inflow / self.e0
    }

    pub fn relocate_share(&self) -> f64 {
        self.e_relocate / self.e0
    }

    /// Growth minus its signed components; zero up to rounding.
    pub fn identity_residual(&self) -> f64 {
        self.growth() - (-self.exit_share() + self.inflow_share() - self.relocate_share())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowReport {
    pub aggregates: Vec<FlowAggregate>,
    /// Municipalities with zero base employment.
    pub excluded: Vec<u32>,
}

impl TaskFlows {
    fn class_mut(&mut self, c: TaskClass) -> &mut ClassFlows {
        match c {
            TaskClass::Routine => &mut self.routine,
            TaskClass::Abstract => &mut self.abstract_,
        }
    }
}

fn add_task(tf: &mut TaskFlows, t: &TransitionRecord) -> Result<(), PanelError> {
    let need = |c: Option<TaskClass>, which: &str| {
        c.ok_or_else(|| PanelError::MissingTask { worker_id: t.worker_id, which: which.to_string() })
    };
    use Classification::*;
    match t.classification {
        Stayer => {
            let (c0, c1) = (need(t.task0, "base")?, need(t.task1, "end")?);
            if c0 == c1 {
                tf.class_mut(c0).e_stay += t.fte0;
            } else {
                tf.class_mut(c0).e_switch_out += t.fte0;
                tf.class_mut(c1).e_switch_in += t.fte0;
            }
        }
        Displaced => tf.class_mut(need(t.task0, "base")?).e_exit += t.fte0,
        Relocated => tf.class_mut(need(t.task0, "base")?).e_relocate += t.fte0,
        InflowFromNonEmp | InflowFromOtherRegion => tf.class_mut(need(t.task1, "end")?).e_inflow += t.fte1,
        NonEmployedBoth => {}
    }
    Ok(())
}

/// Sums transitions into per-municipality accounts, ordered by muni id.
/// Base and end employment are built from the components, so the growth
/// identity holds by construction.
pub fn aggregate_flows(transitions: &[TransitionRecord], task_split: bool) -> Result<FlowReport, PanelError> {
    let mut by_muni: BTreeMap<u32, FlowAggregate> = BTreeMap::new();
    let mut window: Option<(i32, i32)> = None;
    for t in transitions {
        match window {
            None => window = Some((t.base_year, t.end_year)),
            Some(w) if w != (t.base_year, t.end_year) => {
                return Err(PanelError::Window { base_year: t.base_year, end_year: t.end_year })
            }
            _ => {}
        }
        let a = by_muni.entry(t.region).or_insert_with(|| FlowAggregate {
            muni_id: t.region,
            tasks: task_split.then(TaskFlows::default),
            ..Default::default()
        });
        use Classification::*;
        match t.classification {
            Stayer => a.e_stay += t.fte0,
            Displaced => a.e_exit += t.fte0,
            Relocated => a.e_relocate += t.fte0,
            InflowFromNonEmp => {
                a.e_inflow += t.fte1;
                a.e_inflow_nonemp += t.fte1;
            }
            InflowFromOtherRegion => {
                a.e_inflow += t.fte1;
                a.e_inflow_other += t.fte1;
            }
            NonEmployedBoth => {}
        }
        if let Some(tf) = a.tasks.as_mut() {
            add_task(tf, t)?;
        }
    }
    let mut report = FlowReport::default();
    for (muni, mut a) in by_muni {
        a.e0 = a.e_stay + a.e_exit + a.e_relocate;
        a.e1 = a.e_stay + a.e_inflow;
        if a.e0 > 0.0 {
            report.aggregates.push(a);
        } else {
            report.excluded.push(muni);
        }
    }
    Ok(report)
}
