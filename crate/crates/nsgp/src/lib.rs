//! File formats, configuration, model artifacts and the command-line
//! interface for `nsgp-core`.

pub mod artifact;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod output;
pub mod plot;
pub mod runner;

pub use error::{CliError, CliResult};
