//! Command-line layer: flat key=value scenario configuration and the
//! subcommand runners behind the `sis-sde` binary.

pub mod config;
pub mod run;
