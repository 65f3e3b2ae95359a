//! `beable-mech`: optimize a field, simulate beable ensembles, and extract
//! mechanism information from modulation sweeps.

mod check;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_mechanism, cmd_optimize, cmd_simulate, require_field, Outputs};
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "beable-mech", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize population transfer; writes field.csv and convergence.csv.
    Optimize(Overrides),
    /// Propagate, sample a trajectory ensemble and write the analysis tables.
    Simulate(Overrides),
    /// Modulation sweep, j_min estimate and fit-window search.
    Mechanism(Overrides),
    /// optimize, then simulate and mechanism on the optimized field.
    All(Overrides),
    /// Print the default configuration as JSON.
    DefaultConfig,
}

fn run(command: Command) -> Result<(), CliError> {
    let flags = match &command {
        Command::DefaultConfig => {
            let text = serde_json::to_string_pretty(&RunConfig::default()).map_err(beable_core::Error::from)?;
            println!("{text}");
            return Ok(());
        }
        Command::Optimize(f) | Command::Simulate(f) | Command::Mechanism(f) | Command::All(f) => f,
    };
    let cfg = RunConfig::resolve(flags)?;
    let sys = cfg.system()?;
    let mut outputs = Outputs::default();
    let result = match &command {
        Command::Optimize(_) => cmd_optimize(&cfg, &sys, &mut outputs).map(drop),
        Command::Simulate(_) => require_field(&cfg).and_then(|field| cmd_simulate(&cfg, &sys, &field, &mut outputs)),
        Command::Mechanism(_) => require_field(&cfg).and_then(|field| cmd_mechanism(&cfg, &sys, &field, &mut outputs)),
        Command::All(_) => cmd_optimize(&cfg, &sys, &mut outputs).and_then(|opt| {
            cmd_simulate(&cfg, &sys, &opt.field, &mut outputs)?;
            cmd_mechanism(&cfg, &sys, &opt.field, &mut outputs)
        }),
        Command::DefaultConfig => unreachable!("handled above"),
    };
    if flags.self_check {
        commands_check(&outputs, &sys)?;
    }
    result
}

fn commands_check(outputs: &Outputs, sys: &beable_core::LevelSystem) -> Result<(), CliError> {
    check::self_check(&outputs.artifacts, sys)?;
    eprintln!("self-check: {} files ok", outputs.artifacts.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
