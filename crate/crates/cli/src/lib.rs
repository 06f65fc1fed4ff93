//! `rsrag` command-line tool and HTTP service.

pub mod commands;
pub mod config;
pub mod error;
pub mod server;

pub use commands::{run, Cli, Command};
pub use error::{CliError, ExitKind};
