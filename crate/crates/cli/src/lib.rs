//! The `qport` command line: configuration, write-once experiment records
//! and the commands that fill them.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use qport::zne::ZneMethod;

use crate::commands::MethodArg;
use crate::config::{ExperimentConfig, Overrides, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "qport",
    version,
    about = "Portfolio QUBO, QAOA and ZNE experiments"
)]
pub struct Cli {
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output root; the experiment writes to `<out>/<name>/`.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Experiment name, overriding the config.
    #[arg(long, global = true)]
    pub name: Option<String>,
    /// Run seeds, overriding the config. Repeat or separate with commas.
    #[arg(long, global = true, value_delimiter = ',')]
    pub seed: Vec<u64>,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// Noise scales, e.g. `--lambda 1,2,3`.
    #[arg(long = "lambda", global = true, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic table to `<experiment>/data/`.
    Synth {
        #[arg(long)]
        n: Option<usize>,
        /// Table seed; defaults to the config's synthetic seed.
        #[arg(long)]
        table_seed: Option<u64>,
    },
    /// Build the QUBO and its Ising form into `qubo.json`.
    Build,
    /// Run classical solvers into `runs/solve-*.json`.
    Solve {
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
    },
    /// Noiseless warm-started QAOA into `runs/qaoa-seed*.json`.
    Qaoa,
    /// Noisy runs at every noise scale plus extrapolation, into `runs/zne-seed*.json`.
    Zne,
    /// Statistics over ZNE runs or a replay file, into `stats.json`.
    Stats {
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// `report.json` and `report.txt` from the records or a replay file.
    Report {
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Extrapolation used as each run's ZNE score.
        #[arg(long, value_parser = parse_zne_method)]
        method: Option<ZneMethod>,
    },
}

fn parse_zne_method(s: &str) -> std::result::Result<ZneMethod, String> {
    ZneMethod::ALL
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| format!("expected one of linear, quadratic, richardson; got `{s}`"))
}

/// Runs one command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<String>> {
    let overrides = Overrides {
        name: cli.name.clone(),
        seeds: cli.seed.clone(),
        shots: cli.shots,
        lambdas: cli.lambdas.clone(),
        out: cli.out.clone(),
    };
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    match &cli.command {
        Command::Synth { n, table_seed } => commands::synth(&cfg, *n, *table_seed),
        Command::Build => commands::build(&cfg),
        Command::Solve { method } => commands::solve(&cfg, *method),
        Command::Qaoa => commands::qaoa(&cfg),
        Command::Zne => commands::zne(&cfg),
        Command::Stats { replay } => commands::stats(&cfg, replay.as_deref()),
        Command::Report { replay, method } => {
            report::report(&cfg, replay.as_deref(), method.unwrap_or(cfg.zne_method))
        }
    }
}
