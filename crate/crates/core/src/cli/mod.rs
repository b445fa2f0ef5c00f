//! Command-line front end. Each command reads a flat `key = value` config,
//! applies flag overrides, and writes its artifacts into a fresh
//! timestamped run directory.

mod commands;
mod config;
mod run_dir;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_detect, cmd_eval, cmd_grid, cmd_synth, cmd_train, summarize, DetectReport, MetricsReport, ModelSummary,
    SeedMetrics, SplitMetrics,
};
pub use config::{resolve_data_path, schema, RunConfig, DATA_ROOT_ENV};
pub use run_dir::RunDir;

use crate::error::{FitsError, Result};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fits", version, about = "Frequency-interpolation forecasting and anomaly detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Parent directory for the run directory.
    #[arg(long, value_name = "DIR", default_value = "runs")]
    pub out: PathBuf,
    /// Seed list, overriding `seeds` (or `seed` for synth).
    #[arg(long, value_name = "N[,N...]")]
    pub seed: Option<String>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a forecaster for every seed and report validation/test metrics.
    Train(CommonArgs),
    /// Grid search over look-back windows, harmonics and supervision modes.
    Grid(CommonArgs),
    /// Evaluate a saved checkpoint on the validation and test splits.
    Eval(CommonArgs),
    /// Reconstruction-based anomaly detection with threshold selection.
    Detect {
        #[command(flatten)]
        common: CommonArgs,
        /// Train a reconstruction model before scoring instead of loading one.
        #[arg(long)]
        train_first: bool,
    },
    /// Write the synthetic anomaly dataset.
    Synth(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Train(_) => "train",
            Command::Grid(_) => "grid",
            Command::Eval(_) => "eval",
            Command::Detect { .. } => "detect",
            Command::Synth(_) => "synth",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Train(c) | Command::Grid(c) | Command::Eval(c) | Command::Synth(c) => c,
            Command::Detect { common, .. } => common,
        }
    }
}

/// Config file plus overrides, validated against the command's keys.
pub fn build_config(command: &str, common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(command, path).map_err(|e| match e {
            FitsError::Io { path, source } => {
                FitsError::Config(format!("cannot read config {}: {source}", path.display()))
            }
            other => other,
        })?,
        None => RunConfig::new(command),
    };
    for pair in &common.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| FitsError::Config(format!("--set expects KEY=VALUE, got `{pair}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seeds) = &common.seed {
        let key = if command == "synth" { "seed" } else { "seeds" };
        cfg.set(key, seeds)?;
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<PathBuf> {
    let common = cli.command.common();
    let cfg = build_config(cli.command.name(), common)?;
    match &cli.command {
        Command::Train(_) => cmd_train(&cfg, &common.out),
        Command::Grid(_) => cmd_grid(&cfg, &common.out),
        Command::Eval(_) => cmd_eval(&cfg, &common.out),
        Command::Detect { train_first, .. } => cmd_detect(&cfg, &common.out, *train_first),
        Command::Synth(_) => cmd_synth(&cfg, &common.out),
    }
}

pub fn exit_code(err: &FitsError) -> i32 {
    match err {
        FitsError::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}
