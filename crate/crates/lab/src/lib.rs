//! Batch front end for `shakn-core`: run configurations, CSV/JSON output and
//! the `shakn` command.

pub mod config;
pub mod format;
pub mod run;

pub use config::{ConfigError, Document, RunConfig, Sweep};
pub use run::{run, run_sweep, Outcome, RunError, Subcommand};
