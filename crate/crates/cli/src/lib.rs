//! Batch driver for the critflow toolkit: configuration, subcommands and the
//! acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod random;

/// Crate version with the `git describe` suffix when built from a checkout.
pub const VERSION: &str = env!("CRITFLOW_VERSION");

pub use config::{LambdaSpec, RunConfig};
pub use error::CliError;
