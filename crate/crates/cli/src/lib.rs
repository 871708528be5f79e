//! Scenario-driven front end: configuration, the analysis pipeline, amplitude
//! sweeps and plot-data emission.

// NaN-rejecting `!(x > 0.0)` guards and index loops over banded storage are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod pipeline;
pub mod plots;
pub mod sweep;

pub use config::{ConfigError, Scenario, SCENARIO_SCHEMA};
pub use pipeline::{execute, persist, run_scenario, PipelineError, RunData, RunReport, RunStatus, Stage, REPORT_SCHEMA};
pub use plots::{emit_plots, PlotError};
pub use sweep::{run_sweep, write_sweep, SweepRow, SweepSummary};

/// Output root used when neither `--out` nor `NLSLAB_OUT` is given.
pub const DEFAULT_OUT: &str = "runs";
