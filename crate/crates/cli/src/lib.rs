//! Scenario runner: config parsing, sweeps and output files.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod scenarios;

pub use config::{validate_scenario, Scenario};
pub use error::{CliError, FieldError};
pub use run::{run_scenario, RunResult};
