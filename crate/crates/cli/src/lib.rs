//! Command-line front-end: TOML scenario files in, CSV/JSON artifacts out.

pub mod artifacts;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;

use cli::{Cli, Command};
use error::CliResult;

/// Runs one command and returns what should go to stdout.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Pulse(a) => commands::pulse(a),
    }
}
