use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use thiserror::Error;

mod config;
mod experiment;

use experiment::{Options, Subcommand};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("oracle check failed: {0}")]
    Oracle(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Oracle(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

/// TH-IR-UWB transceiver experiments.
#[derive(Debug, Parser)]
#[command(name = "uwbsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, ClapSubcommand)]
enum Command {
    /// Pulse PSD, 10 dB bandwidth and UWB verdict.
    PulseSpectrum(RunArgs),
    /// Monte Carlo BER over the configured Eb/N0 list.
    BerSweep(RunArgs),
    /// Friis range for every frequency / power pair.
    RangeTable(RunArgs),
    /// Stream with the configured register events; per-frame trace.
    ReconfigDemo(RunArgs),
    /// Reference static vs reconfigurable synthesis results.
    CompareRef(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Leave the generation time out of output headers.
    #[arg(long)]
    no_timestamp: bool,
    /// Compare results with closed-form oracles; exit 2 on mismatch.
    #[arg(long)]
    check_oracles: bool,
}

impl Command {
    fn split(self) -> (Subcommand, RunArgs) {
        match self {
            Command::PulseSpectrum(a) => (Subcommand::PulseSpectrum, a),
            Command::BerSweep(a) => (Subcommand::BerSweep, a),
            Command::RangeTable(a) => (Subcommand::RangeTable, a),
            Command::ReconfigDemo(a) => (Subcommand::ReconfigDemo, a),
            Command::CompareRef(a) => (Subcommand::CompareRef, a),
        }
    }
}

fn execute(cmd: Subcommand, args: RunArgs) -> Result<(), CliError> {
    let resolved = config::load(&args.config)?.resolve()?;
    let opts = Options {
        out: args.out,
        timestamp: !args.no_timestamp,
        check_oracles: args.check_oracles,
    };
    let outcome = experiment::run(cmd, &resolved, &opts)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    println!("wrote {}", outcome.artifact.display());
    if outcome.oracle_failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Oracle(outcome.oracle_failures.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; 2 is reserved for oracle failures here.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (cmd, args) = cli.command.split();
    match execute(cmd, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uwbsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
