//! Command-line driver for the halluprobe studies.
//!
//! Every subcommand writes a JSON report that embeds its resolved
//! arguments, plus TSV sidecars for tables and plot data.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod study;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
