//! `deamort`: runs the de-amortized cuckoo hashing experiments and writes
//! machine-readable reports.
//!
//! Exit status: 0 on success, 1 on an oracle mismatch or a failed rehash,
//! 2 on a usage or configuration error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "deamort", version, about = "De-amortized cuckoo hashing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration (JSON, or TOML with a .toml extension)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory, created if absent
    #[arg(long = "out", global = true, value_name = "DIR", default_value = "out")]
    pub output_dir: PathBuf,

    /// Hash seed material as hex; overrides DEAMORT_SEED and the config file
    #[arg(long = "seed", global = true, value_name = "HEX")]
    pub seed_override: Option<String>,

    /// Report formats to write
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    pub format: Format,

    /// Worker threads (default: one per core)
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Run workloads against both implementations and the oracle
    Trial,
    /// Sweep move budget and queue constant, recommend defaults
    Calibrate,
    /// Compare worst-case move counts as capacity grows
    Scaling,
    /// Replay the most expensive keys of a pilot run
    Adversary,
    /// Run the invariant suite on tiny instances
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Trial => "trial",
            Command::Calibrate => "calibrate",
            Command::Scaling => "scaling",
            Command::Adversary => "adversary",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(commands::Status::Success) => ExitCode::SUCCESS,
        Ok(commands::Status::Failed(why)) => {
            eprintln!("deamort: {why}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("deamort: {err:#}");
            eprintln!("usage: deamort <trial|calibrate|scaling|adversary|selftest> [--config PATH] [--out DIR] [--seed HEX] [--format csv|json|both] [--jobs N]");
            ExitCode::from(2)
        }
    }
}
