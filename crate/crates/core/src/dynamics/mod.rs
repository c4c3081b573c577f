//! Configuration dynamics `ξ ↦ ξ^{(t)}`, occupation measures and the
//! diagnostics built on them.

pub mod diagnostics;
pub mod evolve;
pub mod orbit;

pub use diagnostics::{
    default_panel, endpoint_at_horizon, family_panel, fixed_point_residual, ito_scr_f_check, lln_residual,
    markov_consistency, FixedPointResidual, ItoScrFReport, LlnParams, LlnResidual, MarkovParams, MarkovReport,
    PanelFunctional, DEFAULT_CONDITIONAL_REPLICAS, MIN_CONDITIONAL_REPLICAS,
};
pub use evolve::{evolve_config, log_scr_f, scr_f, Environment, EvolvedConfig};
pub use orbit::{endpoint_config, occupation_measure, run_log, write_run_log, Orbit, OccupationMeasure, RunLogRecord};
