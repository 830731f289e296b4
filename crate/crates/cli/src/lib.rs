//! Batch front end: a flat JSON run config, one function per subcommand, and
//! deterministic CSV/JSON/OBJ artifacts that embed the config that made them.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::execute;
pub use config::{Command, RunConfig, FORMAT_VERSION};
pub use error::CliError;
