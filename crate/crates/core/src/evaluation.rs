//! Ranking and text-quality metrics.

use std::collections::{HashMap, HashSet};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    candidate_pool, derive_examples, render_candidate, Corpus, CorpusError, FeatureMode, PlacementExample, PoolScope,
    Split, Task,
};
use crate::ranking::{rank, Candidate, RankingError, Scorer, ScorerInput};
use crate::rng;
use crate::text::{normalize_name, tokenize};

/// Gold plus 20 distractors.
pub const DEFAULT_NUM_CANDIDATES: usize = 21;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("num_candidates must be at least 2, got {0}")]
    InvalidCandidates(usize),
    #[error("no examples to evaluate")]
    NoExamples,
    #[error("examples mix tasks {0} and {1}")]
    MixedTasks(Task, Task),
    #[error("distractor pool has {available} non-gold candidates for `{gold}`, need {needed}")]
    PoolTooSmall {
        gold: String,
        needed: usize,
        available: usize,
    },
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Candidates per example, gold included.
    pub num_candidates: usize,
    pub distractor_source: PoolScope,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            num_candidates: DEFAULT_NUM_CANDIDATES,
            distractor_source: PoolScope::TaskAllPool,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub context: String,
    pub gold: String,
    pub top1: String,
    /// 0 when the gold is ranked first.
    pub gold_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub feature_mode: FeatureMode,
    pub scorer: String,
    pub num_candidates: usize,
    pub distractor_source: PoolScope,
    pub seed: u64,
    pub examples: usize,
    /// Percentage in [0, 100].
    pub hits_at_1: f64,
    pub records: Vec<ExampleRecord>,
}

impl EvalReport {
    pub fn hits(&self) -> usize {
        self.records.iter().filter(|r| r.gold_rank == 0).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per example.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "index",
            "task",
            "feature_mode",
            "scorer",
            "context",
            "gold",
            "top1",
            "gold_rank",
        ])?;
        for (i, r) in self.records.iter().enumerate() {
            w.write_record([
                i.to_string(),
                self.task.to_string(),
                self.feature_mode.to_string(),
                self.scorer.clone(),
                r.context.clone(),
                r.gold.clone(),
                r.top1.clone(),
                r.gold_rank.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Hits@1 of `scorer` over `examples`, each ranked against its gold and
/// `num_candidates - 1` distractors drawn from `pool`.
///
/// Distractor choice, gold position and any scorer randomness come from a
/// stream keyed by (seed, example index), so results do not depend on thread
/// scheduling. The gold's text is taken from the pool entry with the same
/// folded name when present.
pub fn hits_at_1(
    scorer: &dyn Scorer,
    examples: &[PlacementExample],
    pool: &[Candidate],
    feature_mode: FeatureMode,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let keys: Vec<String> = pool.iter().map(|c| normalize_name(&c.name)).collect();
    let gold_of = |ex: &PlacementExample| {
        let key = normalize_name(&ex.gold);
        keys.iter()
            .position(|k| *k == key)
            .map_or_else(|| Candidate::named(ex.gold.clone()), |j| pool[j].clone())
    };
    run(scorer, examples, pool, feature_mode, config, &gold_of)
}

fn run(
    scorer: &dyn Scorer,
    examples: &[PlacementExample],
    pool: &[Candidate],
    feature_mode: FeatureMode,
    config: &EvalConfig,
    gold_of: &(dyn Fn(&PlacementExample) -> Candidate + Sync),
) -> Result<EvalReport, EvalError> {
    let k = config.num_candidates;
    if k < 2 {
        return Err(EvalError::InvalidCandidates(k));
    }
    let first = examples.first().ok_or(EvalError::NoExamples)?;
    if let Some(other) = examples.iter().find(|e| e.task != first.task) {
        return Err(EvalError::MixedTasks(first.task, other.task));
    }
    let keys: Vec<String> = pool.iter().map(|c| normalize_name(&c.name)).collect();

    let records = examples
        .par_iter()
        .enumerate()
        .map(|(i, ex)| {
            let gold_key = normalize_name(&ex.gold);
            let others: Vec<usize> = (0..pool.len()).filter(|&j| keys[j] != gold_key).collect();
            if others.len() < k - 1 {
                return Err(EvalError::PoolTooSmall {
                    gold: ex.gold.clone(),
                    needed: k - 1,
                    available: others.len(),
                });
            }
            let gold = gold_of(ex);
            let mut stream = rng::derived_stream(config.seed, "eval", i as u64);
            let mut candidates: Vec<Candidate> = sample(&mut stream, others.len(), k - 1)
                .into_iter()
                .map(|j| pool[others[j]].clone())
                .collect();
            let gold_at = stream.gen_range(0..k);
            candidates.insert(gold_at, gold);
            let input = ScorerInput::new(ex.task, ex.context_text.clone(), candidates);
            let order = rank(scorer, &input, &mut stream)?;
            let gold_rank = order.iter().position(|&j| j == gold_at).expect("gold ranked");
            Ok(ExampleRecord {
                context: ex.context_text.clone(),
                gold: ex.gold.clone(),
                top1: input.candidates[order[0]].name.clone(),
                gold_rank,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let hits = records.iter().filter(|r| r.gold_rank == 0).count();
    Ok(EvalReport {
        task: first.task,
        feature_mode,
        scorer: scorer.name(),
        num_candidates: k,
        distractor_source: config.distractor_source,
        seed: config.seed,
        examples: records.len(),
        hits_at_1: 100.0 * hits as f64 / records.len() as f64,
        records,
    })
}

/// Evaluate one task and split of a corpus, building the distractor pool
/// from `config.distractor_source`.
pub fn evaluate_task(
    corpus: &Corpus,
    scorer: &dyn Scorer,
    task: Task,
    mode: FeatureMode,
    split: Split,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let examples: Vec<PlacementExample> = derive_examples(corpus, task, mode)?
        .into_iter()
        .filter(|e| e.split == split)
        .collect();
    let pool = candidate_pool(corpus, task, mode, config.distractor_source)?;
    let gold_of = |ex: &PlacementExample| render_candidate(corpus, task, mode, &ex.gold);
    run(scorer, &examples, &pool, mode, config, &gold_of)
}

fn counts(tokens: &[String]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// Word-overlap F1 between lowercase token multisets.
pub fn f1_overlap(predicted: &str, gold: &str) -> f64 {
    let p = tokenize(predicted);
    let g = tokenize(gold);
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let gc = counts(&g);
    let common: usize = counts(&p)
        .iter()
        .map(|(t, n)| (*n).min(gc.get(t).copied().unwrap_or(0)))
        .sum();
    // 2PR/(P+R) with P = c/|p|, R = c/|g|.
    2.0 * common as f64 / (p.len() + g.len()) as f64
}

fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = &[String]> {
    tokens.windows(n.max(1)).filter(move |_| n > 0)
}

/// Fraction of generated n-grams (with multiplicity) that also occur in
/// `train`. Returns 0 when the generated texts contain no n-grams.
pub fn ngram_novelty<G, T>(generated: &[G], train: &[T], n: usize) -> f64
where
    G: AsRef<str>,
    T: AsRef<str>,
{
    let train_tokens: Vec<Vec<String>> = train.iter().map(|t| tokenize(t.as_ref())).collect();
    let known: HashSet<&[String]> = train_tokens.iter().flat_map(|t| ngrams(t, n)).collect();
    let mut total = 0usize;
    let mut present = 0usize;
    for text in generated {
        let tokens = tokenize(text.as_ref());
        for gram in ngrams(&tokens, n) {
            total += 1;
            if known.contains(gram) {
                present += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        present as f64 / total as f64
    }
}
