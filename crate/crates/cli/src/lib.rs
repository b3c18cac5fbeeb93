//! Library half of the `qee` binary: configuration, commands and CSV output.
//! Kept separate from `main.rs` so the integration and acceptance tests can
//! drive the commands in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Invocation, Outcome};
pub use config::{Mode, RunConfig};
pub use error::{CliError, CliResult};
