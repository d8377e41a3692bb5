//! Experiment driver: TOML configs, ε sweeps with replica aggregation,
//! CSV, plot-data and manifest output.

pub mod config;
pub mod error;
pub mod plotdata;
pub mod presets;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use sweep::{run_sweep, write_outputs, RunOptions, SweepOutcome, SweepRow};
