//! Driver for MISC experiments: configuration, rate fitting, adaptive runs,
//! a Monte Carlo baseline and convergence tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::Outcome;
pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "misc", version, about = "Multi-index stochastic collocation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML experiment config; the desk-scale default when omitted.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum number of solves per MISC run.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Comma-separated MISC tolerance schedule.
    #[arg(long, value_delimiter = ',')]
    pub tol: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit spatial convergence and cost rates.
    FitRates(Common),
    /// Adaptive MISC runs over the tolerance schedule.
    Misc(Common),
    /// Single-level Monte Carlo baseline.
    Mc(Common),
    /// Merge MISC, Monte Carlo and full-tensor results.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Directory with the misc outputs; defaults to the output directory.
        #[arg(long)]
        misc_dir: Option<PathBuf>,
        /// Directory with the mc outputs; defaults to the output directory.
        #[arg(long)]
        mc_dir: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::read(p)?,
        None => ExperimentConfig::desk_default(),
    };
    cfg.apply(&Overrides {
        out: common.out.clone(),
        seed: common.seed,
        budget: common.budget,
        tolerances: common.tol.clone(),
    })?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::FitRates(c) => commands::fit::cmd_fit_rates(&load(c)?),
        Command::Misc(c) => commands::misc::cmd_misc(&load(c)?),
        Command::Mc(c) => commands::mc::cmd_mc(&load(c)?),
        Command::Convergence {
            common,
            misc_dir,
            mc_dir,
        } => {
            let cfg = load(common)?;
            let out: &Path = &cfg.output.dir;
            let misc_dir = misc_dir.clone().unwrap_or_else(|| out.to_path_buf());
            let mc_dir = mc_dir.clone().unwrap_or_else(|| out.to_path_buf());
            commands::convergence::cmd_convergence(&cfg, &misc_dir, &mc_dir)
        }
    }
}
