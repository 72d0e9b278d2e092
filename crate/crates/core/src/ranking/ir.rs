use std::collections::{BTreeMap, HashMap};

use rand::RngCore;

use super::{RankingError, Scorer, ScorerInput};
use crate::corpus::{Corpus, FeatureMode};
use crate::text::{tokenize, Vocabulary};

/// TF-IDF weights keyed by token, sorted by token.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(String, f64)>,
    norm: f64,
}

impl SparseVector {
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.entries[i].1 * other.entries[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Cosine similarity; 0 when either vector is empty.
    pub fn cosine(&self, other: &SparseVector) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        self.dot(other) / (self.norm * other.norm)
    }
}

/// Word-overlap retrieval baseline: cosine of TF-IDF vectors with raw term
/// counts and smoothed idf `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone)]
pub struct IrScorer {
    vocab: Vocabulary,
    cache: HashMap<String, SparseVector>,
}

impl IrScorer {
    /// Fit document frequencies on `documents` and pre-vectorise them.
    pub fn fit<I, S>(documents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let docs: Vec<String> = documents.into_iter().map(|d| d.as_ref().to_string()).collect();
        let mut scorer = IrScorer {
            vocab: Vocabulary::build(&docs),
            cache: HashMap::new(),
        };
        let cache = docs.iter().map(|d| (d.clone(), scorer.vectorize(d))).collect();
        scorer.cache = cache;
        scorer
    }

    /// Fit on every card of the corpus rendered in `mode`.
    pub fn fit_corpus(corpus: &Corpus, mode: FeatureMode) -> Self {
        Self::fit(corpus_documents(corpus, mode))
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn idf(&self, token: &str) -> f64 {
        let n = f64::from(self.vocab.doc_count());
        let df = f64::from(self.vocab.doc_freq(token));
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    pub fn vectorize(&self, text: &str) -> SparseVector {
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokenize(text) {
            *tf.entry(t).or_insert(0) += 1;
        }
        let entries: Vec<(String, f64)> = tf
            .into_iter()
            .map(|(t, c)| {
                let w = f64::from(c) * self.idf(&t);
                (t, w)
            })
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        SparseVector { entries, norm }
    }

    fn vector(&self, text: &str) -> std::borrow::Cow<'_, SparseVector> {
        match self.cache.get(text) {
            Some(v) => std::borrow::Cow::Borrowed(v),
            None => std::borrow::Cow::Owned(self.vectorize(text)),
        }
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        self.vector(a).cosine(&self.vector(b))
    }
}

/// Regular locations, fillers, characters and objects, in corpus order.
pub(crate) fn corpus_documents(corpus: &Corpus, mode: FeatureMode) -> Vec<String> {
    let locs = corpus
        .locations()
        .iter()
        .chain(corpus.filler_locations())
        .map(|c| mode.render(&c.name, &c.description));
    let chars = corpus.characters().iter().map(|c| mode.render(&c.name, &c.description));
    let objs = corpus.objects().iter().map(|c| mode.render(&c.name, &c.description));
    locs.chain(chars).chain(objs).collect()
}

/// Cosines that agree to 12 decimals are the same score. Without this,
/// candidates with equal weight multisets could differ in the last bit
/// depending on summation order and escape the index tie-break.
pub fn round_score(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl Scorer for IrScorer {
    fn name(&self) -> String {
        "ir".into()
    }

    fn score(&self, input: &ScorerInput, _rng: &mut dyn RngCore) -> Result<Vec<f64>, RankingError> {
        input.check()?;
        let ctx = self.vector(&input.context_text);
        Ok(input
            .candidates
            .iter()
            .map(|c| round_score(ctx.cosine(&self.vector(&c.text))))
            .collect())
    }
}
