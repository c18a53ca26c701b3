//! Experiment runner for light-curve transit classification: config files,
//! report artifacts, run manifests and the `lcml` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use commands::{run_experiment, RunOptions, RunSummary};
pub use error::{CliError, Result};

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
