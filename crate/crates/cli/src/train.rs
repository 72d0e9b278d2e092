use std::collections::BTreeMap;
use std::path::Path;

use anyhow::bail;
use worldsmith_core::corpus::{candidate_pool, derive_examples, PoolScope, Split};
use worldsmith_core::evaluation::{evaluate_task, EvalConfig, DEFAULT_NUM_CANDIDATES};
use worldsmith_core::ranking::{save_model, train_embedding_scorer, EmbeddingParams, EpochLoss};
use worldsmith_core::Corpus;

use crate::{write, TrainArgs};

fn params(args: &TrainArgs, seed: u64) -> EmbeddingParams {
    let d = EmbeddingParams::default();
    EmbeddingParams {
        dim: args.dim.unwrap_or(d.dim),
        max_norm: args.max_norm.unwrap_or(d.max_norm),
        learning_rate: args.learning_rate.unwrap_or(d.learning_rate),
        input_dropout: args.input_dropout.unwrap_or(d.input_dropout),
        margin: args.margin.unwrap_or(d.margin),
        negatives: args.negatives.unwrap_or(d.negatives),
        epochs: args.epochs.unwrap_or(d.epochs),
        seed,
        subword_buckets: args.subword_buckets.unwrap_or(d.subword_buckets),
    }
}

fn loss_csv(trace: &[EpochLoss]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "mean_loss", "examples"])?;
    for l in trace {
        w.write_record([
            l.epoch.to_string(),
            format!("{:.9}", l.mean_loss),
            l.examples.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn run(corpus: &Corpus, seed: u64, out: &Path, args: &TrainArgs) -> anyhow::Result<()> {
    let params = params(args, seed);
    params.validate()?;
    let tasks = args.task.tasks();
    let mut examples = Vec::new();
    let mut pools = BTreeMap::new();
    for &task in &tasks {
        examples.extend(
            derive_examples(corpus, task, args.feature)?
                .into_iter()
                .filter(|e| e.split == Split::Train),
        );
        pools.insert(
            task,
            candidate_pool(corpus, task, args.feature, PoolScope::TaskTrainPool)?,
        );
    }
    if examples.is_empty() {
        bail!("no training examples for the selected tasks");
    }
    let (model, trace) = train_embedding_scorer(&examples, &pools, &params)?;
    if let Some(bad) = trace.iter().find(|l| !l.mean_loss.is_finite()) {
        bail!("training diverged at epoch {}", bad.epoch);
    }

    let model_path = out.join(&args.model_name);
    if let Some(parent) = model_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_model(&model, &model_path)?;
    write(&out.join("loss.csv"), loss_csv(&trace)?)?;

    println!(
        "trained on {} examples for {} epochs; final loss {:.4}",
        examples.len(),
        params.epochs,
        trace.last().map_or(0.0, |l| l.mean_loss)
    );
    println!("model: {}", model_path.display());
    println!("{:<12} {:>9} {:>4} {:>8}", "task", "examples", "K", "hits@1");
    for &task in &tasks {
        let pool_size = candidate_pool(corpus, task, args.feature, PoolScope::TaskAllPool)?.len();
        let config = EvalConfig {
            num_candidates: DEFAULT_NUM_CANDIDATES.min(pool_size),
            seed,
            ..EvalConfig::default()
        };
        match evaluate_task(corpus, &model, task, args.feature, Split::Train, &config) {
            Ok(r) => println!(
                "{:<12} {:>9} {:>4} {:>8.2}",
                task.as_str(),
                r.examples,
                r.num_candidates,
                r.hits_at_1
            ),
            Err(e) => println!("{:<12} skipped: {e}", task.as_str()),
        }
    }
    Ok(())
}
