//! Command-line pipeline: `synth`, `init`, `preprocess`, `train`,
//! `transfer`, `evaluate`, `tradeoff`.
//!
//! Exit codes: 0 success, 2 usage or data error, 3 numeric failure.

pub mod commands;
pub mod config;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    cmd_evaluate, cmd_preprocess, cmd_synth, cmd_tradeoff, cmd_train, cmd_transfer, load_prepared, transfer_lines,
    EvalContext, Prepared, Tradeoff, TrainOverrides,
};
pub use config::{run_tag, DimGrid, ExperimentConfig, GridPoint, LexiconPaths, Preset};

use crate::error::Result;
use crate::models::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "textstyle", version, about = "Non-parallel text style transfer and its evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic marker corpus, word vectors and a config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        per_style: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Write a preset config file to edit.
    Init {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
    },
    /// Clean the style files, split them and build the vocabulary.
    Preprocess {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train one model; flags override the config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: Option<ModelKind>,
        #[arg(long)]
        word_dim: Option<usize>,
        #[arg(long)]
        enc_dim: Option<usize>,
        #[arg(long)]
        style_dim: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rewrite each input line toward a target style.
    Transfer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Target style name as listed in the config.
        #[arg(long)]
        style: String,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Split lines on whitespace instead of the default tokenizer.
        #[arg(long)]
        pretokenized: bool,
    },
    /// Score a checkpoint on the test split and append a results row.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Write source, target style and output side by side.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Train and evaluate every point of the dimension grid.
    Tradeoff {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: Option<ModelKind>,
        /// Also write an SVG scatter of the points.
        #[arg(long)]
        svg: bool,
    },
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth { out, per_style, seed } => cmd_synth(&out, per_style, seed).map(drop),
        Command::Init { preset, out } => {
            ExperimentConfig::preset(preset).save(&out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Preprocess { config } => cmd_preprocess(&ExperimentConfig::load(&config)?).map(drop),
        Command::Train {
            config,
            model,
            word_dim,
            enc_dim,
            style_dim,
            batch_size,
            lr,
            max_epochs,
            seed,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let overrides = TrainOverrides {
                model,
                word_dim,
                enc_dim,
                style_dim,
                batch_size,
                lr,
                max_epochs,
                seed,
            };
            let train_cfg = overrides.apply(&cfg);
            train_cfg.validate()?;
            let prepared = load_prepared(&cfg)?;
            cmd_train(&cfg, &prepared, &train_cfg).map(drop)
        }
        Command::Transfer {
            checkpoint,
            input,
            style,
            output,
            pretokenized,
        } => cmd_transfer(&checkpoint, &input, &style, output.as_deref(), pretokenized),
        Command::Evaluate {
            config,
            checkpoint,
            dump,
        } => cmd_evaluate(&ExperimentConfig::load(&config)?, &checkpoint, dump.as_deref()).map(drop),
        Command::Tradeoff { config, model, svg } => {
            let cfg = ExperimentConfig::load(&config)?;
            cmd_tradeoff(&cfg, model.unwrap_or(cfg.model), svg).map(drop)
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
