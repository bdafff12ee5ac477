//! Configuration, artifact formats and commands behind the `stinecurve`
//! binary.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult};
