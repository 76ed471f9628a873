//! Command-line front end for `gaussfb`: TOML scenario configurations in,
//! JSON reports and CSV tables out.

pub mod commands;
pub mod config;
pub mod table;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bounds,
    Steady,
    Sweep,
    Simulate,
    CheckTightness,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] gaussfb::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    /// 2 for configuration errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Library(e) => match e.kind() {
                gaussfb::ErrorKind::Input => 2,
                gaussfb::ErrorKind::Numerical => 3,
            },
            CliError::Output(_) => 1,
        }
    }
}

pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

/// Runs one command and returns the main output; the optional raw file is
/// written here.
pub fn execute(inv: &Invocation) -> Result<String, CliError> {
    let cfg = RunConfig::load(&inv.config)?.resolve(inv.seed)?;
    let default = if inv.command == Command::Sweep { Format::Csv } else { Format::Json };
    let format = inv.format.unwrap_or(default);
    let out = match inv.command {
        Command::Bounds => commands::bounds(cfg, format)?,
        Command::Steady => commands::steady(cfg, format)?,
        Command::Sweep => commands::sweep_cmd(cfg, format)?,
        Command::Simulate => commands::simulate(cfg, format)?,
        Command::CheckTightness => commands::check_tightness(cfg, format)?,
    };
    if let Some((path, text)) = &out.raw {
        write_file(path, text)?;
    }
    Ok(out.main)
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}
