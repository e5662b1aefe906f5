//! Config-driven experiment runner for `hysched`.
//!
//! A TOML file selects a system, a solver and an experiment (`solve`,
//! `compare`, `sweep-horizon` or `mpc`). Results are written as CSV under a
//! directory named after the hash of the resolved config.

pub mod config;
pub mod error;
pub mod experiments;

pub use config::{load_config, parse_config, ExperimentConfig, LoadedConfig, Overrides};
pub use error::CliError;
pub use experiments::{run_experiment, write_run, RunOutput};
