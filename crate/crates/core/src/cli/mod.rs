//! `mvladdm <synth|encode|train|eval>`.

mod commands;
mod config;
mod encode;

pub use commands::{cmd_eval, cmd_synth, cmd_train, split_train_test};
pub use config::{ClipConfig, ClipView, DataPaths, EncodeConfig, EvalConfig, RunConfig, CONFIG_HELP};
pub use encode::cmd_encode;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::model::AttentionMode;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed binary input: {0}")]
    Binary(String),
    #[error("dimension mismatch: {0}")]
    TrainMismatch(String),
    #[error("checkpoint/config mismatch: {0}")]
    EvalMismatch(String),
    #[error("{0}")]
    Other(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Binary(_) => 3,
            Self::TrainMismatch(_) => 4,
            Self::EvalMismatch(_) => 5,
            Self::Other(_) | Self::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mvladdm",
    version,
    about = "Multi-view latent-attention sequence labelling on synthetic or encoded data",
    after_long_help = CONFIG_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and write an 80/20 train/test split.
    Synth(RunArgs),
    /// Encode raw volumes, flows and descriptor maps into window features.
    Encode(RunArgs),
    /// Train a model; writes a checkpoint and the loss trace.
    Train(RunArgs),
    /// Decode a test set; writes metrics and ethograms.
    Eval(RunArgs),
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    /// Config file (TOML, see --help for keys).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Disable label transitions (decode with a zero transition matrix).
    #[arg(long)]
    pub no_transitions: bool,
    /// Uniform fusion weights over view subsets.
    #[arg(long, conflicts_with = "shared_only")]
    pub no_attention: bool,
    /// Use only the posterior fused from all views.
    #[arg(long)]
    pub shared_only: bool,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl RunArgs {
    pub fn attention_override(&self) -> Option<AttentionMode> {
        if self.shared_only {
            Some(AttentionMode::SharedOnly)
        } else if self.no_attention {
            Some(AttentionMode::Uniform)
        } else {
            None
        }
    }

    pub fn load_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.override_seed(seed);
        }
        Ok(cfg)
    }
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Self::Synth(a) | Self::Encode(a) | Self::Train(a) | Self::Eval(a) => a,
        }
    }
}

/// Runs one subcommand; data and paths go to `stdout`.
pub fn run<W: Write>(cli: &Cli, stdout: &mut W) -> Result<(), CliError> {
    let args = cli.command.args();
    let cfg = args.load_config()?;
    std::fs::create_dir_all(&args.out)?;
    match &cli.command {
        Command::Synth(_) => cmd_synth(&cfg, args, stdout),
        Command::Encode(_) => cmd_encode(&cfg, args, stdout),
        Command::Train(_) => cmd_train(&cfg, args, stdout),
        Command::Eval(_) => cmd_eval(&cfg, args, stdout),
    }
}
