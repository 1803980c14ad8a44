//! Library half of the `csisniff` binary: configuration, synthesis
//! scenarios, subcommands and the acceptance checks.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod positions;
pub mod scenario;

pub use error::{CliError, CliResult};
