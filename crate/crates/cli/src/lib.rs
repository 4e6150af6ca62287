//! Configuration parsing and experiment orchestration for the `moire` binary.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, parse_config_in, ExperimentConfig, Kind, Params};
pub use error::CliError;
pub use run::{run_experiment, RunReport};
