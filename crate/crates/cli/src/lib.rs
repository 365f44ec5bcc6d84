//! Batch front end: JSON run configs in, CSV or JSON reports out.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{run, Command};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
