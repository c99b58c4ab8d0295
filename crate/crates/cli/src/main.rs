//! `quickdet`: run detection experiments from a TOML configuration.
//!
//! Exit codes: 0 success, 1 i/o, 2 bad configuration, 3 numerical
//! failure, 4 missing or stale cached artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cache;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Overrides};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "quickdet", version, about = "Quickest detection from quantum-cognition decision makers")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `experiment.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed; overrides `experiment.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Belief grid intervals; overrides `solver.grid`.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Value-iteration tolerance; overrides `solver.tol`.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep phi and flag sure-thing violations.
    StpSweep {
        #[arg(long)]
        points: Option<usize>,
    },
    /// Build the action kernel, solve the stopping problem and cache both.
    Solve,
    /// Quantum and classical thresholds over `experiment.f_values`.
    ThresholdSweep,
    /// Monte Carlo episodes under the cached policy.
    Simulate {
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Cost bound for a detector with mismatched parameters.
    Sensitivity,
    /// Dominance and value ordering between two parameter boxes.
    RegionScan,
}

fn run(cli: Cli) -> CliResult<Vec<String>> {
    let path = cli
        .config
        .ok_or_else(|| error::CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.apply(&Overrides { out: cli.out, seed: cli.seed, grid: cli.grid, tol: cli.tol });
    match cli.command {
        Command::StpSweep { points } => commands::stp_sweep(&cfg, points),
        Command::Solve => commands::solve(&cfg),
        Command::ThresholdSweep => commands::threshold_sweep(&cfg),
        Command::Simulate { episodes } => commands::simulate(&cfg, episodes),
        Command::Sensitivity => commands::sensitivity(&cfg),
        Command::RegionScan => commands::region(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.code())
        }
    }
}
