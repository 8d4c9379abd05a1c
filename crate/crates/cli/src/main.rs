mod args;
mod commands;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Usage problems exit with status 2, everything else with status 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::Usage(msg.to_string())
    }
}

impl From<orderest_core::Error> for Failure {
    fn from(e: orderest_core::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
            args::parse_config(&text).map_err(Failure::Usage)?
        }
        None => Default::default(),
    };
    let global = args::merge(&cli.global, &config).map_err(Failure::Usage)?;
    match cli.command {
        Command::Psi(a) => commands::psi(&global, &args::merge(&a, &config).map_err(Failure::Usage)?),
        Command::Bounds(a) => commands::bounds(&global, &args::merge(&a, &config).map_err(Failure::Usage)?),
        Command::Improve(a) => commands::improve(&global, &args::merge(&a, &config).map_err(Failure::Usage)?),
        Command::Simulate(a) => commands::simulate(&global, &args::merge(&a, &config).map_err(Failure::Usage)?),
        Command::Analyze(a) => commands::analyze(&args::merge(&a, &config).map_err(Failure::Usage)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("Run 'orderest --help' for usage.");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
