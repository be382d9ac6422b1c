//! Experiment harness for the subspace tracker.
//!
//! Subcommands:
//! - `synthetic`: drifting-subspace study with certificate curves,
//! - `sysid`: online identification of a plant with tracker comparison,
//! - `validate`: hyperparameter grid search on the validation split,
//! - `certify`: tabulate the tube bounds for given constants.
//!
//! Exit codes: 0 on success, 2 when the certificate feasibility check
//! rejects the configuration, 1 on any other error.

mod certify;
mod config;
mod csvio;
mod ltv_file;
mod synthetic;
mod sysid;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "great",
    about = "Subspace tracking experiments and certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the synthetic drifting-subspace study.
    Synthetic(RunArgs),
    /// Run an online identification study on a plant file.
    Sysid(RunArgs),
    /// Grid-search hyperparameters on the validation split.
    Validate(RunArgs),
    /// Evaluate the certificate bounds without running a tracker.
    Certify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV artifacts.
    #[arg(long)]
    out: PathBuf,
}

fn dispatch(command: &Command) -> Result<()> {
    let args = match command {
        Command::Synthetic(a) | Command::Sysid(a) | Command::Validate(a) | Command::Certify(a) => a,
    };
    let config = ExperimentConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(config.seed);
    match command {
        Command::Synthetic(_) => {
            let section = config
                .synthetic
                .as_ref()
                .ok_or_else(|| anyhow!("config has no [synthetic] section"))?;
            synthetic::run_synthetic(section, seed, &args.out)?;
        }
        Command::Sysid(_) => {
            let section = config
                .sysid
                .as_ref()
                .ok_or_else(|| anyhow!("config has no [sysid] section"))?;
            sysid::run_sysid(section, seed, &args.out)?;
        }
        Command::Validate(_) => {
            let section = config
                .sysid
                .as_ref()
                .ok_or_else(|| anyhow!("config has no [sysid] section"))?;
            let grid = config
                .validate
                .as_ref()
                .ok_or_else(|| anyhow!("config has no [validate] section"))?;
            sysid::run_validate(section, grid, seed, &args.out)?;
        }
        Command::Certify(_) => {
            let section = config
                .certify
                .as_ref()
                .ok_or_else(|| anyhow!("config has no [certify] section"))?;
            certify::run_certify(section, &args.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.to_string().contains("assumption violated") {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
