//! Spell-panel data handling and the structural microsimulator.

pub mod paneldata;
pub mod synthpanel;
