//! Command-line driver: simulate observations, decompound them, evaluate the
//! scattering forward model and regenerate the full experiment grid.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "so3-decompound",
    version,
    about = "Compound Poisson processes on SO(3) and decompounding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Configuration file (`[section]` headers with `key = value` lines).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Small sample sizes for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw i.i.d. observations of the (noisy) compound process.
    Simulate(Common),
    /// Estimate the jump spectrum and density from observations.
    Decompound {
        #[command(flatten)]
        common: Common,
        /// Observation CSV (default: observations.csv in the output directory).
        #[arg(long, value_name = "PATH", conflicts_with = "oracle")]
        obs: Option<PathBuf>,
        /// Use the exact observation spectrum instead of data.
        #[arg(long)]
        oracle: bool,
    },
    /// Transmitted-intensity and mixture-density curves for a scattering layer.
    Scatter(Common),
    /// Run the g × n experiment grid and write every table plus a summary.
    Figures(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&commands::Context::new(&c, "simulate")?),
        Command::Decompound { common, obs, oracle } => {
            let ctx = commands::Context::new(&common, "decompound")?;
            commands::decompound(&ctx, obs.as_deref(), oracle)
        }
        Command::Scatter(c) => commands::scatter(&commands::Context::new(&c, "scatter")?),
        Command::Figures(c) => commands::figures(&commands::Context::new(&c, "figures")?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
