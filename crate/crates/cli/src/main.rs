use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Joint timing-offset and channel estimation for multi-user UFMC uplink.
#[derive(Debug, Parser)]
#[command(name = "ufmc-anm", version, after_long_help = config_keys_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the sub-band filter taps and their 2N-point responses.
    FilterDesign(Common),
    /// Estimate offsets and channels from one pilot window.
    Estimate(Common),
    /// Offset NMSE versus SNR for the estimator and the correlation baseline.
    SweepNmse(Common),
    /// BER versus SNR for the estimated and the perfectly synchronised arm.
    SweepBer(Common),
}

#[derive(Debug, Args)]
#[command(after_long_help = config_keys_help())]
pub struct Common {
    /// TOML config file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory (overrides experiment.output).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// RNG seed (overrides system.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a config key, e.g. `--set solver.max_iter=300`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Debug-level logging.
    #[arg(long, short)]
    pub verbose: bool,
}

fn config_keys_help() -> String {
    let width = ufmc_anm::config::CONFIG_KEYS
        .iter()
        .map(|(k, _, _)| k.len())
        .max()
        .unwrap_or(0);
    let mut text = String::from("Config keys (all optional; default shown):\n");
    for (key, default, what) in ufmc_anm::config::CONFIG_KEYS {
        text.push_str(&format!("  {key:width$}  = {default}\n      {what}\n"));
    }
    text
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or config: exit 2.
    Usage(String),
    /// Estimation or I/O failure: exit 1.
    Runtime(String),
}

impl From<ufmc_anm::Error> for CliError {
    fn from(e: ufmc_anm::Error) -> Self {
        use ufmc_anm::Error as E;
        match e {
            E::Config(_) | E::InvalidParameter(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type Handler = fn(&Common) -> Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, Handler) = match &cli.command {
        Command::FilterDesign(c) => (c, commands::filter_design),
        Command::Estimate(c) => (c, commands::estimate),
        Command::SweepNmse(c) => (c, commands::sweep_nmse),
        Command::SweepBer(c) => (c, commands::sweep_ber),
    };
    env_logger::Builder::new()
        .filter_level(if common.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Info })
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    match run(common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
