//! `alaam`: batch front end for simulation, estimation and model evaluation.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 a method was
//! asked to run outside its preconditions, 4 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use alaam::{AlaamError, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use output::Outputs;

#[derive(Debug, Parser)]
#[command(
    name = "alaam",
    version,
    about = "Bayesian auto-logistic actor-attribute models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw outcome statistics at `sampler.theta`.
    Simulate(RunArgs),
    /// Posterior sampling: draws, predictive statistics, imputations, summary.
    Estimate(RunArgs),
    /// Posterior-predictive goodness of fit.
    Gof(RunArgs),
    /// Path-sampled log-likelihood at `evaluation.theta` or the posterior mean.
    Loglik(RunArgs),
    /// DIC for the configured model and each compared model.
    Dic(RunArgs),
    /// Log marginal likelihood, or an evidence curve over `evaluation.lambdas`.
    Evidence(RunArgs),
    /// Posterior summaries across the `evaluation.phi1_grid` sensitivity grid.
    MnarSweep(RunArgs),
}

/// Flags only override configuration keys.
#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `sampler.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Adds a covariate to `data.standardize` (repeatable).
    #[arg(long = "standardize", value_name = "COLUMN")]
    standardize: Vec<String>,
}

type Runner = fn(&RunConfig, &mut Outputs) -> Result<()>;

fn run(name: &str, args: &RunArgs, runner: Runner) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(seed) = args.seed {
        cfg.sampler.seed = seed;
    }
    for col in &args.standardize {
        if !cfg.data.standardize.contains(col) {
            cfg.data.standardize.push(col.clone());
        }
    }
    let mut out = Outputs::create(&cfg.output.dir)?;
    runner(&cfg, &mut out)?;
    out.lap("write");
    out.finish(name, &cfg)
}

fn exit_code(e: &AlaamError) -> u8 {
    match e {
        AlaamError::Precondition(_) => 3,
        AlaamError::Numerical(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (name, args, runner): (&str, RunArgs, Runner) = match Cli::parse().command {
        Command::Simulate(a) => ("simulate", a, commands::simulate),
        Command::Estimate(a) => ("estimate", a, commands::estimate),
        Command::Gof(a) => ("gof", a, commands::gof_cmd),
        Command::Loglik(a) => ("loglik", a, commands::loglik),
        Command::Dic(a) => ("dic", a, commands::dic),
        Command::Evidence(a) => ("evidence", a, commands::evidence_cmd),
        Command::MnarSweep(a) => ("mnar-sweep", a, commands::mnar_sweep_cmd),
    };
    match run(name, &args, runner) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
