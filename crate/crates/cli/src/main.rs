//! `emhd`: experiments for the 2.5D electron MHD norm-inflation study.
//!
//! Exit codes: 0 success, 1 I/O, 2 configuration, 3 resolution abort,
//! 4 numerical abort.

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};

use crate::commands::RunKind;
use crate::config::{ExperimentConfig, Overrides};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "emhd", version, about = "Pseudo-spectral EMHD norm-inflation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the initial data; write a checkpoint and its norms.
    InitData(Overrides),
    /// Evolve the full system.
    Run(Overrides),
    /// Evolve `a` with the velocity frozen at `u0`.
    FrozenRun(Overrides),
    /// Sobolev norms of the closed-form carrier over log-spaced times.
    ApproxScan(Overrides),
    /// Exact admissibility verdicts over a (beta, gamma) grid.
    Region(Overrides),
    /// One experiment per lambda, aggregated in lambda order.
    Sweep(Overrides),
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    let (o, run): (Overrides, fn(&ExperimentConfig, &std::path::Path) -> Result<(), CliError>) = match cmd {
        Command::InitData(o) => (o, commands::init_data),
        Command::Run(o) => (o, |c, p| commands::run(c, p, RunKind::Full)),
        Command::FrozenRun(o) => (o, |c, p| commands::run(c, p, RunKind::Frozen)),
        Command::ApproxScan(o) => (o, commands::approx_scan),
        Command::Region(o) => (o, commands::region),
        Command::Sweep(o) => (o, commands::sweep),
    };
    let cfg = ExperimentConfig::resolve(&o)?;
    run(&cfg, &o.out)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("emhd: {e}");
        std::process::exit(e.exit_code());
    }
}
