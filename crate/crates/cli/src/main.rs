//! `interdep`: networks, counterfactual effects, estimation and Monte Carlo
//! experiments for treatments in interacting economies.
//!
//! Exit codes: 0 success, 1 I/O or numerical failure, 2 invalid
//! configuration or input, 3 stability violation, 4 experiment failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use interdep::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{write_all, Artifact};

#[derive(Parser)]
#[command(name = "interdep", version, about = "Counterfactual effects of treatments in interacting economies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the interaction matrix and write it with its spectral metadata.
    Network(Common),
    /// True partial-equilibrium, local and network-consistent effects.
    Effects(Common),
    /// Simulate (or load) one population and fit SAR-ML and OLS.
    Fit(Common),
    /// Monte Carlo experiment over every assignment block, plus checks.
    Mc(Common),
    /// The table of counterfactual regimes.
    Regimes(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replications.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(Error::Input(_) | Error::Parameter(_)) => 2,
            CliError::Core(Error::Model(_)) => 3,
            CliError::Core(Error::Experiment(_)) => 4,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

type Build = fn(&RunConfig) -> interdep::Result<Vec<Artifact>>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, build): (&Common, Build) = match &cli.command {
        Command::Network(c) => (c, commands::network),
        Command::Effects(c) => (c, commands::effects),
        Command::Fit(c) => (c, commands::fit),
        Command::Mc(c) => (c, commands::mc),
        Command::Regimes(c) => (c, |_| Ok(commands::regimes())),
    };
    let cfg = load(common)?;
    let artifacts = match common.jobs {
        Some(0) => {
            return Err(ConfigError { source: "--jobs".into(), line: None, message: "must be at least 1".into() }.into())
        }
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
            pool.install(|| build(&cfg))?
        }
        None => build(&cfg)?,
    };
    write_all(&common.out, artifacts).map_err(|source| CliError::Io { path: common.out.clone(), source })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
