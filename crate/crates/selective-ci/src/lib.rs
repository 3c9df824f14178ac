//! Simulation harness, file formats and command-line plumbing for
//! selection-adjusted confidence intervals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod plot;
pub mod procedure;
pub mod results;
pub mod scenario;
pub mod simulation;
pub mod theory_check;

pub use procedure::Procedure;
pub use results::{CoverageRecord, ExperimentResult, PercentileRecord, Percentiles, PowerCurve, PowerRecord};
pub use scenario::{resolve_eta, EtaSpec, Scenario, TauSpec};
