//! Configuration-driven experiments on top of `horizon-core`: single runs,
//! Berger eps-sweeps with a consistency report, and plot-data emission.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;
pub mod sweep;

pub use config::{ExperimentConfig, OUTPUT_ROOT_ENV};
pub use error::{CliError, Result, EXIT_CONTRADICTION, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
pub use plot::{emit_plot_data, load_report};
pub use run::{execute, run, RunReport};
pub use sweep::{execute_sweep, sweep, SweepOutcome, SweepSummary};
