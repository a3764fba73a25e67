//! Command-line frontend: experiment configs, subcommands, and the
//! desk-scale experiments behind the acceptance run.

pub mod commands;
pub mod config;
pub mod experiments;
