use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, FeatureMode, Split, Task};
use crate::ranking::Candidate;
use crate::text::normalize_name;

/// One supervised (context, gold candidate) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementExample {
    pub task: Task,
    pub split: Split,
    pub context_text: String,
    /// Annotated candidate name, as written on the source card.
    pub gold: String,
    pub source_id: String,
}

/// Which examples contribute gold answers to a candidate pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolScope {
    /// Golds of training examples only.
    TaskTrainPool,
    /// Golds of every split.
    TaskAllPool,
}

/// One example per (source card, annotated target), grouped train, valid,
/// test by the split of the source card.
pub fn derive_examples(corpus: &Corpus, task: Task, mode: FeatureMode) -> Result<Vec<PlacementExample>, CorpusError> {
    let splits = corpus.task_splits(task).ok_or(CorpusError::MissingSplits(task))?;
    let mut out = Vec::new();
    for split in Split::ALL {
        let ids = splits.get(split);
        match task {
            Task::Location | Task::Character | Task::Object => {
                for card in corpus.locations().iter().filter(|c| ids.contains(&c.id)) {
                    let golds = match task {
                        Task::Location => &card.neighbors,
                        Task::Character => &card.characters,
                        _ => &card.objects,
                    };
                    let context = mode.render(&card.name, &card.description);
                    out.extend(golds.iter().map(|g| PlacementExample {
                        task,
                        split,
                        context_text: context.clone(),
                        gold: g.clone(),
                        source_id: card.id.clone(),
                    }));
                }
            }
            Task::Container => {
                for card in corpus.objects().iter().filter(|c| ids.contains(&c.id)) {
                    let context = mode.render(&card.name, &card.description);
                    out.extend(card.contained_examples.iter().map(|g| PlacementExample {
                        task,
                        split,
                        context_text: context.clone(),
                        gold: g.clone(),
                        source_id: card.id.clone(),
                    }));
                }
            }
        }
    }
    Ok(out.into_iter().filter(|e| !e.gold.trim().is_empty()).collect())
}

/// Scorer-facing form of a candidate element name for `task`.
///
/// Names resolving to a card use the card's canonical name (plus description
/// in the richer mode); unresolved names are passed through. Container
/// candidates are always name-only.
pub fn render_candidate(corpus: &Corpus, task: Task, mode: FeatureMode, name: &str) -> Candidate {
    let mode = if task == Task::Container {
        FeatureMode::NameOnly
    } else {
        mode
    };
    let card = match task {
        Task::Location => corpus
            .location_by_name(name)
            .map(|c| (c.name.as_str(), c.description.as_str())),
        Task::Character => corpus
            .character_by_name(name)
            .map(|c| (c.name.as_str(), c.description.as_str())),
        Task::Object | Task::Container => corpus
            .object_by_name(name)
            .map(|c| (c.name.as_str(), c.description.as_str())),
    };
    match card {
        Some((n, d)) => Candidate::new(n, mode.render(n, d)),
        None => Candidate::new(name, name),
    }
}

/// Distinct gold answers of `task`, in first-appearance order.
pub fn candidate_pool(
    corpus: &Corpus,
    task: Task,
    mode: FeatureMode,
    scope: PoolScope,
) -> Result<Vec<Candidate>, CorpusError> {
    let examples = derive_examples(corpus, task, mode)?;
    let mut seen = HashSet::new();
    Ok(examples
        .iter()
        .filter(|e| scope == PoolScope::TaskAllPool || e.split == Split::Train)
        .filter(|e| seen.insert(normalize_name(&e.gold)))
        .map(|e| render_candidate(corpus, task, mode, &e.gold))
        .collect())
}

/// Every corpus card that can fill `task`'s target slot. Filler locations
/// are excluded; they are placed by the world builder, never ranked.
pub fn element_candidates(corpus: &Corpus, task: Task, mode: FeatureMode) -> Vec<Candidate> {
    match task {
        Task::Location => corpus
            .locations()
            .iter()
            .map(|c| Candidate::new(&c.name, mode.render(&c.name, &c.description)))
            .collect(),
        Task::Character => corpus
            .characters()
            .iter()
            .map(|c| Candidate::new(&c.name, mode.render(&c.name, &c.description)))
            .collect(),
        Task::Object => corpus
            .objects()
            .iter()
            .map(|c| Candidate::new(&c.name, mode.render(&c.name, &c.description)))
            .collect(),
        Task::Container => corpus
            .objects()
            .iter()
            .map(|c| Candidate::new(&c.name, c.name.clone()))
            .collect(),
    }
}
