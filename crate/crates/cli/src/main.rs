//! Pipeline driver: each subcommand runs one stage against a run
//! configuration, validating upstream artifacts and recording provenance in
//! the output directory's manifest.

mod config;
mod error;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, Overrides};
use crate::error::Result;

#[derive(Parser)]
#[command(
    name = "phenotype",
    version,
    about = "Health-forum corpus analytics: classification, topic extraction, and phenotype statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Run configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Fail on the first malformed corpus line.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and normalize the corpus.
    Ingest(StageArgs),
    /// Build the weak-labeled training set and train the thread classifier.
    ClassifyTrain(StageArgs),
    /// Classify all threads and keep the positive ones.
    ClassifyPredict(StageArgs),
    /// Build the term-document matrix and its weighted variants.
    Weight(StageArgs),
    /// Train the topic model and derive prevalence, saliency, and the map.
    Lda(StageArgs),
    /// Train word embeddings on the whole corpus.
    Embed(StageArgs),
    /// Prune and expand the topics against the embedding space.
    Refine(StageArgs),
    /// Expand seed clusters into sub-topics.
    Subtopics(StageArgs),
    /// Compute frequencies, NPMI correlation, and demographic segmentation.
    Analyze(StageArgs),
    /// Bundle the analytics and listings into the report directory.
    Report(StageArgs),
}

impl Command {
    fn stage(&self) -> (&'static str, &StageArgs) {
        match self {
            Command::Ingest(a) => ("ingest", a),
            Command::ClassifyTrain(a) => ("classify-train", a),
            Command::ClassifyPredict(a) => ("classify-predict", a),
            Command::Weight(a) => ("weight", a),
            Command::Lda(a) => ("lda", a),
            Command::Embed(a) => ("embed", a),
            Command::Refine(a) => ("refine", a),
            Command::Subtopics(a) => ("subtopics", a),
            Command::Analyze(a) => ("analyze", a),
            Command::Report(a) => ("report", a),
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let (stage, args) = cli.command.stage();
    let overrides = Overrides {
        out_dir: args.out.clone(),
        seed: args.seed,
        strict: args.strict,
    };
    let cfg = load_config(&args.config, &overrides)?;
    stages::run_stage(stage, &cfg)?;
    eprintln!("{stage}: ok ({})", cfg.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
