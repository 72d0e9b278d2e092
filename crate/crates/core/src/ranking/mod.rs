//! Candidate scorers for the placement tasks.
//!
//! Every scorer maps a context text and an ordered candidate list to one
//! finite score per candidate; [`rank`] turns scores into an ordering with a
//! fixed tie-break (ascending candidate index).
//!
//! Scorers receive the caller's random stream. Deterministic scorers ignore
//! it; [`RandomScorer`] draws from it, which keeps parallel evaluation and
//! batch world generation reproducible without shared mutable state.

mod baselines;
mod embedding;
mod ir;
mod model_io;

use std::collections::HashSet;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Task;
use crate::text::normalize_name;

pub use baselines::{ProportionalScorer, RandomScorer};
pub use embedding::{
    train_embedding_scorer, train_from, EmbeddingModel, EmbeddingParams, EpochLoss, SubwordTable, TrainingMeta,
};
pub use ir::{IrScorer, SparseVector};
pub use model_io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("duplicate candidate `{0}`")]
    DuplicateCandidate(String),
    #[error("no training examples")]
    NoExamples,
    #[error("candidate pool for task `{0}` has no negatives")]
    EmptyPool(Task),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("model file version mismatch: {0}")]
    Version(String),
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("model i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A rankable element: its name (identity) and the text a scorer sees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub text: String,
}

impl Candidate {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Candidate {
            name: name.into(),
            text: text.into(),
        }
    }

    /// Candidate whose scorer text is its name.
    pub fn named(name: impl Into<String>) -> Self {
        let name = name.into();
        Candidate {
            text: name.clone(),
            name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerInput {
    pub task: Task,
    pub context_text: String,
    pub candidates: Vec<Candidate>,
}

impl ScorerInput {
    pub fn new(task: Task, context_text: impl Into<String>, candidates: Vec<Candidate>) -> Self {
        ScorerInput {
            task,
            context_text: context_text.into(),
            candidates,
        }
    }

    /// Non-empty, and no two candidates share a folded name.
    pub fn check(&self) -> Result<(), RankingError> {
        if self.candidates.is_empty() {
            return Err(RankingError::EmptyCandidates);
        }
        let mut seen = HashSet::with_capacity(self.candidates.len());
        for c in &self.candidates {
            if !seen.insert(normalize_name(&c.name)) {
                return Err(RankingError::DuplicateCandidate(c.name.clone()));
            }
        }
        Ok(())
    }
}

pub trait Scorer: Send + Sync {
    fn name(&self) -> String;

    /// One finite score per candidate, aligned with `input.candidates`.
    fn score(&self, input: &ScorerInput, rng: &mut dyn RngCore) -> Result<Vec<f64>, RankingError>;
}

/// Indices sorted by descending score; ties keep ascending index order.
pub fn rank_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

pub fn rank(scorer: &dyn Scorer, input: &ScorerInput, rng: &mut dyn RngCore) -> Result<Vec<usize>, RankingError> {
    Ok(rank_scores(&scorer.score(input, rng)?))
}

/// Test double that puts a fixed ranking of names first.
///
/// Named candidates score by their position in `preferred` (earlier is
/// higher); everything else scores 0.
#[derive(Debug, Clone, Default)]
pub struct FixedOrderScorer {
    preferred: Vec<String>,
}

impl FixedOrderScorer {
    pub fn new<I, S>(preferred: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        FixedOrderScorer {
            preferred: preferred.into_iter().map(|s| normalize_name(s.as_ref())).collect(),
        }
    }
}

impl Scorer for FixedOrderScorer {
    fn name(&self) -> String {
        "fixed".into()
    }

    fn score(&self, input: &ScorerInput, _rng: &mut dyn RngCore) -> Result<Vec<f64>, RankingError> {
        input.check()?;
        let n = self.preferred.len() as f64;
        Ok(input
            .candidates
            .iter()
            .map(|c| {
                let key = normalize_name(&c.name);
                self.preferred
                    .iter()
                    .position(|p| *p == key)
                    .map_or(0.0, |i| n - i as f64)
            })
            .collect())
    }
}
