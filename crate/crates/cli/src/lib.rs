//! Experiment runner for the qme library: TOML configs in, CSV tables and a
//! JSON manifest out.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, ExperimentConfig, Kind};
pub use run::{run, run_compare, RunError, RunSummary};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "QME_OUTPUT_DIR";
