//! The `advscape` command-line tool: dataset preparation, training,
//! adversarial augmentation, evaluation and loss-landscape scans, with a run
//! manifest next to every output.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{find, replay, run_stage, Ctx};
use crate::config::{parse_args, parse_pairs};
use crate::error::{io_err, Result};

#[derive(Debug, Parser)]
#[command(name = "advscape", version, about = "Adversarial fine-tuning and loss-landscape toolkit")]
pub struct Cli {
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Suppress progress output.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Stage,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    /// File of `key = value` lines applied before the environment and arguments.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Print the keys this subcommand accepts and exit.
    #[arg(long)]
    pub list_keys: bool,

    /// `key=value` settings.
    pub settings: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Stage {
    /// Synthesize a dataset or import an IDX pair.
    Dataset(StageArgs),
    /// Train a clean base model.
    Train(StageArgs),
    /// Write adversarial counterparts of a dataset.
    Attack(StageArgs),
    /// Write a 1:1 clean plus adversarial dataset.
    Augment(StageArgs),
    /// Fine-tune a model on an augmented dataset.
    Finetune(StageArgs),
    /// Clean and adversarial accuracy with mean 1-SSIM.
    Eval(StageArgs),
    /// Mean 1-SSIM between paired datasets.
    Ssim(StageArgs),
    /// Scan the loss on a 2D grid around a model.
    Scan(StageArgs),
    /// Render a grid as a contour or surface image.
    Plot(StageArgs),
    /// Re-run a recorded stage and check its outputs byte for byte.
    Replay {
        /// Manifest written next to a stage's primary output.
        manifest: PathBuf,
    },
}

impl Stage {
    fn split(&self) -> (&'static str, Option<&StageArgs>) {
        match self {
            Stage::Dataset(a) => ("dataset", Some(a)),
            Stage::Train(a) => ("train", Some(a)),
            Stage::Attack(a) => ("attack", Some(a)),
            Stage::Augment(a) => ("augment", Some(a)),
            Stage::Finetune(a) => ("finetune", Some(a)),
            Stage::Eval(a) => ("eval", Some(a)),
            Stage::Ssim(a) => ("ssim", Some(a)),
            Stage::Scan(a) => ("scan", Some(a)),
            Stage::Plot(a) => ("plot", Some(a)),
            Stage::Replay { .. } => ("replay", None),
        }
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("advscape: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(error::config_err!("--threads must be positive"));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (name, args) = cli.command.split();
    let Some(args) = args else {
        let Stage::Replay { manifest } = &cli.command else { unreachable!() };
        let m = replay(manifest, cli.quiet)?;
        if !cli.quiet {
            println!("replayed {}: {} outputs identical", m.subcommand, m.outputs.len());
        }
        return Ok(());
    };
    let cmd = find(name).expect("every stage has a command");
    let schema = (cmd.schema)();
    if args.list_keys {
        println!("{} - {}\n\n{}", cmd.name, cmd.about, schema.describe());
        return Ok(());
    }
    let mut layers = Vec::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        layers.push(parse_pairs(&text, &path.display().to_string())?);
    }
    layers.push(schema.env_layer(std::env::vars()));
    layers.push(parse_args(&args.settings)?);
    let cfg = schema.resolve(&layers)?;
    let mut ctx = Ctx::new(cli.quiet);
    run_stage(cmd, cfg, &mut ctx, true)?;
    Ok(())
}
