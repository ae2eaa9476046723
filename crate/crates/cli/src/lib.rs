//! Command-line front end of the simulator: config parsing, experiment
//! execution, CSV datasets and per-figure recipes.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod figures;

pub use error::{CliError, CliResult};
