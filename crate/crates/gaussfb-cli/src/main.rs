use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaussfb_cli::{execute, write_file, Command, Format, Invocation};

#[derive(Parser)]
#[command(name = "gaussfb", version, about = "Bounds and optimal feedback for monitored thermal bosonic modes")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Squeezing and entanglement bounds with their tightness flags.
    Bounds(Args),
    /// Conditional steady state, achieved figures of merit and feedback gain.
    Steady(Args),
    /// One scenario evaluated over a parameter grid.
    Sweep(Args),
    /// Monte-Carlo trajectories and their ensemble statistics.
    Simulate(Args),
    /// Whether the bounds are tight and reached by the configured strategy.
    CheckTightness(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for `simulate`, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format; JSON by default, CSV for `sweep`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Bounds(a) => (Command::Bounds, a),
        Cmd::Steady(a) => (Command::Steady, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::CheckTightness(a) => (Command::CheckTightness, a),
    };
    let inv = Invocation { command, config: args.config, out: args.out, seed: args.seed, format: args.format };
    let result = execute(&inv).and_then(|text| match &inv.out {
        Some(path) => write_file(path, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| gaussfb_cli::CliError::Output(e.to_string())),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
