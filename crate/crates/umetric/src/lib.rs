//! File formats and the `umetric` command line on top of `umetric-core`.
//!
//! [`run`] is the whole program behind a function so that tests can drive it
//! without spawning a process.

pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod selftest;

pub use cli::run;
pub use config::{CliConfig, OutputFormat};
pub use error::{CliError, FormatError};
