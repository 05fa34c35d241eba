//! `offload-commons`: CLI front end for the shared-spectrum offload market
//! model. Subcommands solve equilibria, run round-based simulations, classify
//! market outcomes, sweep parameters, and test strategy dominance.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::RunContext;
use config::ScenarioConfig;

const EXIT_CONFIG_ERROR: u8 = 2;
const EXIT_MODEL_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "offload-commons", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Path to the scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for generated artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Override the strategy grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// Override the number of simulated rounds.
    #[arg(long)]
    rounds: Option<usize>,
    /// Override the random seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the intra- and inter-provider equilibria and cross-check them
    /// against the exhaustive grid oracle.
    Equilibrium(CommonOpts),
    /// Run the round-based market simulation and write the trajectory.
    Simulate(CommonOpts),
    /// Simulate, then classify the market outcome and welfare gap.
    Classify(CommonOpts),
    /// Evaluate every point of the configured parameter sweep.
    Sweep(CommonOpts),
    /// Check whether aggressive admission dominates the best response for
    /// the licensed-spectrum provider.
    Dominance(CommonOpts),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, opts) = match &cli.command {
        Command::Equilibrium(o) => ("equilibrium", o),
        Command::Simulate(o) => ("simulate", o),
        Command::Classify(o) => ("classify", o),
        Command::Sweep(o) => ("sweep", o),
        Command::Dominance(o) => ("dominance", o),
    };

    let (config, config_bytes) = match load_config(opts) {
        Ok(pair) => pair,
        Err(issues) => {
            for issue in &issues {
                eprintln!("config error: {issue}");
            }
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
    };

    let ctx = RunContext {
        config: &config,
        config_bytes: &config_bytes,
        out_dir: &opts.out,
        subcommand: name,
    };
    let result = match &cli.command {
        Command::Equilibrium(_) => commands::run_equilibrium(&ctx),
        Command::Simulate(_) => commands::run_simulate(&ctx),
        Command::Classify(_) => commands::run_classify(&ctx),
        Command::Sweep(_) => commands::run_sweep(&ctx),
        Command::Dominance(_) => commands::run_dominance(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            commands::print_model_error(&err);
            ExitCode::from(EXIT_MODEL_ERROR)
        }
    }
}

/// Loads, overrides, and validates the configuration. Any failure here is a
/// configuration error (exit status 2).
fn load_config(opts: &CommonOpts) -> Result<(ScenarioConfig, Vec<u8>), Vec<String>> {
    let bytes = std::fs::read(&opts.config)
        .map_err(|e| vec![format!("cannot read {}: {e}", opts.config.display())])?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| vec![format!("config is not valid UTF-8: {e}")])?;
    let mut config = ScenarioConfig::from_json(&text)
        .map_err(|issues| issues.iter().map(|i| i.to_string()).collect::<Vec<_>>())?;
    if let Some(g) = opts.grid {
        config.grid_steps = g;
    }
    if let Some(r) = opts.rounds {
        config.rounds = r;
    }
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    let issues = config.validate();
    if issues.is_empty() {
        Ok((config, bytes))
    } else {
        Err(issues.iter().map(|i| i.to_string()).collect())
    }
}
