//! The `tdp` command line.
//!
//! Every command writes its outputs and one `<command>.manifest.json` into
//! `--out-dir`. A failing command writes no manifest and exits nonzero.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{ScoreFileRecord, ValidationReport};
pub use config::ConfigFile;
pub use manifest::{Outcome, RunManifest, VERSION};

use tdp_neural::EncoderVariant;

#[derive(Debug, Parser)]
#[command(name = "tdp", version, about = "Temporal dependency parsing toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Worker threads for per-document work (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Skip malformed corpus records with a warning instead of failing.
    #[arg(long, global = true)]
    pub lenient: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus statistics: mentions, labels, parent categories, window coverage.
    Stats(StatsArgs),
    /// Check every record of a corpus file and report the broken ones.
    Validate(ValidateArgs),
    /// Train a ranking model (or grid-search one) and save a checkpoint.
    Train(TrainArgs),
    /// Parse documents with a checkpoint or with injected score tables.
    Parse(ParseArgs),
    /// Score predicted trees against gold trees.
    Eval(EvalArgs),
    /// Deduce all pairwise relations implied by each tree.
    Closure(ClosureArgs),
    /// Check two tree files for closure equivalence, document by document.
    Compare(CompareArgs),
    /// Convert a corpus release into the canonical record format.
    Convert(ConvertArgs),
    /// Write a synthetic corpus with unambiguous tense cues.
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stats(_) => "stats",
            Command::Validate(_) => "validate",
            Command::Train(_) => "train",
            Command::Parse(_) => "parse",
            Command::Eval(_) => "eval",
            Command::Closure(_) => "closure",
            Command::Compare(_) => "compare",
            Command::Convert(_) => "convert",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct WindowArgs {
    /// Preceding mentions offered as parents [default: 10].
    #[arg(long)]
    pub window_back: Option<usize>,
    /// Following mentions offered as parents [default: 3].
    #[arg(long)]
    pub window_forward: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub corpus: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Dev corpus; required by `--grid` and `--select-best-dev`.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// TOML file with [model], [train] and [grid] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// bilstm, bilstm-glove, bilstm-bert or bert-ft [default: bilstm].
    #[arg(long)]
    pub encoder: Option<EncoderVariant>,
    /// Contextual model: `random:tiny` or a directory with config.json,
    /// tokenizer.json (or vocab.txt) and model.safetensors.
    #[arg(long)]
    pub checkpoint: Option<String>,
    /// Word-vector text file for bilstm-glove.
    #[arg(long)]
    pub static_embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Learning rate; repeat to set the grid axis.
    #[arg(long)]
    pub lr: Vec<f64>,
    /// Epoch count; repeat to set the grid axis.
    #[arg(long)]
    pub epochs: Vec<usize>,
    /// Seeds per grid cell.
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep the weights of the best dev epoch instead of the last.
    #[arg(long)]
    pub select_best_dev: bool,
    /// Grid search over learning rates × epochs, then retrain the best cell.
    #[arg(long)]
    pub grid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpFormat {
    /// Indented tree text.
    Tree,
    /// Graphviz digraph.
    Dot,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Documents to parse; gold edges, if any, are ignored.
    pub corpus: PathBuf,
    /// Model directory written by `tdp train`.
    #[arg(long, required_unless_present = "inject_scores")]
    pub checkpoint: Option<PathBuf>,
    /// JSON lines of `{"doc_id", "tables"}` used instead of a model.
    #[arg(long, conflicts_with = "checkpoint")]
    pub inject_scores: Option<PathBuf>,
    /// Also write a human-readable dump of every tree.
    #[arg(long, value_enum)]
    pub dump: Option<DumpFormat>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predicted: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClosureArgs {
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "release")]
    pub from: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    pub docs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Runs one command and writes its manifest.
pub fn run(cli: Cli) -> anyhow::Result<RunManifest> {
    let started = Instant::now();
    std::fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        pool = pool.num_threads(jobs.max(1));
    }
    let pool = pool.build()?;
    let ctx = commands::Context {
        out_dir: cli.out_dir.clone(),
        lenient: cli.lenient,
    };
    let name = cli.command.name();
    let outcome = pool.install(|| commands::dispatch(&ctx, &cli.command))?;
    let manifest = outcome.into_manifest(name, started.elapsed());
    let path = cli.out_dir.join(RunManifest::file_name(name));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
