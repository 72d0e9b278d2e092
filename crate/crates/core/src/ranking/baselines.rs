use std::collections::HashMap;

use rand::{Rng, RngCore};

use super::{RankingError, Scorer, ScorerInput};
use crate::corpus::{PlacementExample, Split, Task};
use crate::text::normalize_name;

/// Uniform i.i.d. scores drawn from the caller's stream.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomScorer;

impl Scorer for RandomScorer {
    fn name(&self) -> String {
        "random".into()
    }

    fn score(&self, input: &ScorerInput, rng: &mut dyn RngCore) -> Result<Vec<f64>, RankingError> {
        input.check()?;
        Ok(input.candidates.iter().map(|_| rng.gen::<f64>()).collect())
    }
}

/// Scores a candidate by how often it is the gold answer in training data.
#[derive(Debug, Clone, Default)]
pub struct ProportionalScorer {
    counts: HashMap<(Task, String), u32>,
}

impl ProportionalScorer {
    /// Count gold answers of the training-split examples.
    pub fn fit<'a, I>(examples: I) -> Self
    where
        I: IntoIterator<Item = &'a PlacementExample>,
    {
        let mut counts = HashMap::new();
        for e in examples.into_iter().filter(|e| e.split == Split::Train) {
            *counts.entry((e.task, normalize_name(&e.gold))).or_insert(0) += 1;
        }
        ProportionalScorer { counts }
    }

    pub fn frequency(&self, task: Task, name: &str) -> u32 {
        self.counts.get(&(task, normalize_name(name))).copied().unwrap_or(0)
    }
}

impl Scorer for ProportionalScorer {
    fn name(&self) -> String {
        "proportional".into()
    }

    fn score(&self, input: &ScorerInput, _rng: &mut dyn RngCore) -> Result<Vec<f64>, RankingError> {
        input.check()?;
        Ok(input
            .candidates
            .iter()
            .map(|c| f64::from(self.frequency(input.task, &c.name)))
            .collect())
    }
}
