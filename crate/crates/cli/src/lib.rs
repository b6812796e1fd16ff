//! Experiment runner behind the `tracethresh` command.

pub mod config;
pub mod error;
pub mod presets;
pub mod run;
pub mod table;

pub use config::{Command, ExperimentConfig, Preset};
pub use error::CliError;
