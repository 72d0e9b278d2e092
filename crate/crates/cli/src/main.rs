//! `worldsmith`: train rankers, evaluate them, build and analyze worlds,
//! and serve the interactive editor API.

mod analyze;
mod build;
mod eval;
mod generate;
mod scorers;
mod serve;
mod train;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use worldsmith_core::corpus::{load_corpus, make_splits, sample_corpus, Split, Task};
use worldsmith_core::{Corpus, FeatureMode};

use crate::scorers::ScorerSpec;

#[derive(Debug, Parser)]
#[command(
    name = "worldsmith",
    version,
    about = "Learned arrangement and population of text-adventure worlds"
)]
struct Cli {
    /// Corpus JSON file; the bundled sample corpus when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    corpus: Option<PathBuf>,
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the embedding ranker and write a model file and loss trace.
    Train(TrainArgs),
    /// Measure Hits@1 of one or more scorers.
    Eval(EvalArgs),
    /// Generate one world, or a seeded batch with --count.
    Build(BuildArgs),
    /// Diversity statistics over a directory of worlds.
    Analyze(AnalyzeArgs),
    /// Write descriptions for a new element name.
    Generate(GenerateArgs),
    /// Run the HTTP editor API until interrupted.
    Serve(ServeArgs),
}

/// `all` or a single task.
#[derive(Debug, Clone, Copy)]
struct TaskSelection(Option<Task>);

impl TaskSelection {
    fn tasks(self) -> Vec<Task> {
        match self.0 {
            Some(t) => vec![t],
            None => Task::ALL.to_vec(),
        }
    }
}

fn parse_tasks(s: &str) -> Result<TaskSelection, String> {
    if s == "all" {
        return Ok(TaskSelection(None));
    }
    s.parse::<Task>()
        .map(|t| TaskSelection(Some(t)))
        .map_err(|e| e.to_string())
}

/// `both` or a single feature mode.
#[derive(Debug, Clone)]
struct ModeSelection(Vec<FeatureMode>);

fn parse_modes(s: &str) -> Result<ModeSelection, String> {
    if s == "both" {
        return Ok(ModeSelection(FeatureMode::ALL.to_vec()));
    }
    s.parse::<FeatureMode>()
        .map(|m| ModeSelection(vec![m]))
        .map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// location, character, object, container or all.
    #[arg(long, default_value = "all", value_parser = parse_tasks)]
    task: TaskSelection,
    /// name_only or name_and_description.
    #[arg(long, default_value = "name_and_description")]
    feature: FeatureMode,
    /// Model file name inside the output directory.
    #[arg(long, default_value = "model.bin")]
    model_name: String,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f32>,
    #[arg(long)]
    margin: Option<f32>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    input_dropout: Option<f64>,
    #[arg(long)]
    max_norm: Option<f32>,
    /// Hash buckets for character n-gram vectors; 0 disables them.
    #[arg(long)]
    subword_buckets: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// random, proportional, ir or embedding:<model path>; repeatable.
    #[arg(long = "scorer", required = true, value_parser = ScorerSpec::parse)]
    scorers: Vec<ScorerSpec>,
    #[arg(long, default_value = "all", value_parser = parse_tasks)]
    task: TaskSelection,
    /// name_only, name_and_description or both.
    #[arg(long, default_value = "both", value_parser = parse_modes)]
    feature: ModeSelection,
    /// Candidates per example, gold included.
    #[arg(long, default_value_t = worldsmith_core::evaluation::DEFAULT_NUM_CANDIDATES)]
    candidates: usize,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Draw distractors from training golds only.
    #[arg(long)]
    train_pool: bool,
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Scorer used for every placement task.
    #[arg(long, default_value = "ir", value_parser = ScorerSpec::parse)]
    scorer: ScorerSpec,
    /// Number of worlds; world i uses seed + i.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Generation config JSON; flags below override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    max_locations: Option<usize>,
    #[arg(long)]
    filler_prob: Option<f64>,
    #[arg(long)]
    blocked_fraction: Option<f64>,
    #[arg(long)]
    extra_connect_prob: Option<f64>,
    #[arg(long)]
    min_score_threshold: Option<f64>,
    #[arg(long)]
    max_characters: Option<usize>,
    #[arg(long)]
    max_objects: Option<usize>,
    #[arg(long)]
    max_contained: Option<usize>,
    #[arg(long)]
    feature: Option<FeatureMode>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Directory of world files; <out>/worlds when omitted.
    #[arg(long, value_name = "DIR")]
    worlds: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    name: String,
    /// location, character or object.
    #[arg(long)]
    kind: worldsmith_core::generator::ElementKind,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Session logs; <out>/sessions when omitted.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value = "ir", value_parser = ScorerSpec::parse)]
    scorer: ScorerSpec,
    #[arg(long, default_value = "name_and_description")]
    feature: FeatureMode,
    /// Suggestions returned per request.
    #[arg(long, default_value_t = 10)]
    suggest_k: usize,
    /// Answer every suggestion request with an empty list.
    #[arg(long)]
    no_suggestions: bool,
}

/// Load the corpus and give every task a split if it lacks one.
fn load(path: Option<&Path>, seed: u64) -> anyhow::Result<Corpus> {
    let corpus = match path {
        Some(p) => {
            if !p.is_file() {
                bail!("corpus file {} does not exist", p.display());
            }
            load_corpus(p)?
        }
        None => sample_corpus(),
    };
    if corpus.locations().is_empty() {
        bail!("corpus has no locations");
    }
    Ok(make_splits(&corpus, [0.8, 0.1, 0.1], seed, false)?)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let corpus_path = cli.corpus.as_deref();
    match cli.command {
        Command::Train(args) => train::run(&load(corpus_path, cli.seed)?, cli.seed, &cli.out, &args),
        Command::Eval(args) => eval::run(&load(corpus_path, cli.seed)?, cli.seed, &cli.out, &args),
        Command::Build(args) => build::run(&load(corpus_path, cli.seed)?, cli.seed, &cli.out, &args),
        Command::Analyze(args) => analyze::run(&load(corpus_path, cli.seed)?, &cli.out, &args),
        Command::Generate(args) => generate::run(&load(corpus_path, cli.seed)?, cli.seed, &cli.out, &args),
        Command::Serve(args) => serve::run(load(corpus_path, cli.seed)?, cli.seed, &cli.out, &args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
