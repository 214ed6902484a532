//! Command-line front end: export, solve and benchmark PMI relaxations, run the
//! penalty pipeline and the brute-force oracles.
//!
//! Exit codes: 0 when the command ran (a solver failure is reported in the
//! output), 2 for rejected input, 3 for internal errors. Errors are printed to
//! stderr as `{"error": {"code", "message", "exit_code"}}`.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::RunConfig;
use crate::error::{CliError, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "pmi-sos", version, about = "Moment-SOS relaxations under polynomial matrix inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Shared {
    /// JSON file with the same keys as the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Subcommand)]
enum Command {
    /// Export relaxations in SDPA sparse format with metadata.
    Relax(Shared),
    /// Solve relaxations and report lower bounds.
    Solve(Shared),
    /// Size and bound table over an instance suite.
    Bench(Shared),
    /// Penalty polynomial grid data.
    Penalty(Shared),
    /// Ground truth by enumeration or sampling.
    Oracle(Shared),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, shared, f): (_, _, fn(&mut Ctx) -> Result<(), CliError>) = match cli.command {
        Command::Relax(s) => ("relax", s, commands::relax),
        Command::Solve(s) => ("solve", s, commands::solve),
        Command::Bench(s) => ("bench", s, commands::bench),
        Command::Penalty(s) => ("penalty", s, commands::penalty),
        Command::Oracle(s) => ("oracle", s, commands::oracle),
    };
    let file = match &shared.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let (cfg, prov) = RunConfig::layered(&shared.run, &file);
    f(&mut Ctx { command: name, cfg, prov })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let err = CliError::input("USAGE", e.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(EXIT_INPUT);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
