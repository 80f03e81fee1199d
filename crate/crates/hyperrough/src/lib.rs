//! Experiment driver for `hyperrough-core`: configuration, parallel Monte
//! Carlo batches, and the CSV/JSON files consumed by plotting scripts.

pub mod batch;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
