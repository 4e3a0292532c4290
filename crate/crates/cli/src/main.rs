//! `twisted`: seeded verification campaigns and single-instance tools.
//!
//! Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 bad
//! configuration or input.

mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;
use twisted_core::Error;

use crate::config::{Cli, Config};

/// Why a run did not produce a passing report.
#[derive(Debug)]
pub enum Failure {
    /// Unusable flags or input files.
    Config(String),
    /// A library error raised while computing.
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(msg) => Failure::Config(msg),
            other => Failure::Core(other),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "configuration error: {msg}"),
            Failure::Core(e) => write!(f, "{}: {e}", e.name()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = Config::resolve(&cli).and_then(|config| commands::run(&cli.command, config));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(match failure {
                Failure::Config(_) => 2,
                Failure::Core(_) => 1,
            })
        }
    }
}
