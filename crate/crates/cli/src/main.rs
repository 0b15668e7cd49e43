//! `quench`: defect-statistics sweeps for the transverse-field Ising chain.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, CommonArgs, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "quench",
    version,
    about = "Defect statistics of quenched transverse-field Ising chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Cumulants against quench depth at fixed quench time.
    SweepDepth(CommonArgs),
    /// Cumulants, power-law fits and crossover against quench time.
    SweepRate(CommonArgs),
    /// Full pair-number distributions, Gaussian reference and sampled histograms.
    Fcs(CommonArgs),
    /// Run the self-check suite; exits 1 if any check fails.
    Verify(CommonArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, args) = match &cli.command {
        Cmd::SweepDepth(a) => (Command::SweepDepth, a),
        Cmd::SweepRate(a) => (Command::SweepRate, a),
        Cmd::Fcs(a) => (Command::Fcs, a),
        Cmd::Verify(a) => (Command::Verify, a),
    };
    let cfg = RunConfig::resolve(command, args)?;
    log::info!("{} with {:?}", command.name(), cfg);
    let written = match command {
        Command::SweepDepth => commands::sweep_depth(&cfg)?,
        Command::SweepRate => commands::sweep_rate(&cfg)?,
        Command::Fcs => commands::fcs(&cfg)?,
        Command::Verify => commands::verify(&cfg)?,
    };
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("quench: {e}");
            e.exit_code()
        }
    }
}
