use rand::seq::SliceRandom;

use super::{Corpus, CorpusError, Split, SplitSets, Task};
use crate::rng;

/// Split `n` items by `ratios` with largest-remainder rounding.
fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn source_ids(corpus: &Corpus, task: Task) -> Vec<String> {
    match task {
        Task::Container => corpus
            .objects()
            .iter()
            .filter(|o| o.is_container())
            .map(|o| o.id.clone())
            .collect(),
        _ => corpus.locations().iter().map(|l| l.id.clone()).collect(),
    }
}

/// Partition each task's source elements into train/valid/test.
///
/// The three location-sourced tasks shuffle the same id list with the same
/// stream, so a location lands in the same split for all of them. Tasks that
/// already have splits are kept unless `overwrite` is set.
pub fn make_splits(corpus: &Corpus, ratios: [f64; 3], seed: u64, overwrite: bool) -> Result<Corpus, CorpusError> {
    if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(CorpusError::InvalidRatios(format!(
            "ratios must be positive, got {ratios:?}"
        )));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidRatios(format!("ratios must sum to 1, got {sum}")));
    }
    let mut splits = corpus.splits().clone();
    for task in Task::ALL {
        if splits.contains_key(&task) && !overwrite {
            continue;
        }
        let mut ids = source_ids(corpus, task);
        let mut stream = rng::derived_stream(seed, "splits", 0);
        ids.shuffle(&mut stream);
        let counts = apportion(ids.len(), ratios);
        let mut sets = SplitSets::default();
        let mut rest = ids.into_iter();
        for (split, n) in Split::ALL.into_iter().zip(counts) {
            sets.get_mut(split).extend(rest.by_ref().take(n));
        }
        splits.insert(task, sets);
    }
    Ok(corpus.with_splits(splits))
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::corpus::sample_corpus;

    fn unsplit_sample() -> Corpus {
        sample_corpus().with_splits(BTreeMap::new())
    }

    #[test]
    fn forty_locations_split_32_4_4() {
        let c = make_splits(&unsplit_sample(), [0.8, 0.1, 0.1], 7, false).unwrap();
        let s = c.task_splits(Task::Location).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (32, 4, 4));
    }

    #[test]
    fn same_seed_same_sets() {
        let a = make_splits(&unsplit_sample(), [0.8, 0.1, 0.1], 7, false).unwrap();
        let b = make_splits(&unsplit_sample(), [0.8, 0.1, 0.1], 7, false).unwrap();
        assert_eq!(a.splits(), b.splits());
        assert_eq!(a.task_splits(Task::Location), a.task_splits(Task::Character));
    }

    #[test]
    fn bad_ratios_rejected() {
        let c = unsplit_sample();
        assert!(matches!(
            make_splits(&c, [0.5, 0.5, 0.2], 1, false),
            Err(CorpusError::InvalidRatios(_))
        ));
        assert!(make_splits(&c, [1.0, 0.0, 0.0], 1, false).is_err());
    }

    #[test]
    fn existing_splits_preserved_unless_overwrite() {
        let c = sample_corpus();
        let kept = make_splits(&c, [0.5, 0.25, 0.25], 3, false).unwrap();
        assert_eq!(kept.splits(), c.splits());
        let redone = make_splits(&c, [0.5, 0.25, 0.25], 3, true).unwrap();
        assert_eq!(redone.task_splits(Task::Location).unwrap().train.len(), 20);
    }

    #[test]
    fn apportion_largest_remainder() {
        assert_eq!(apportion(40, [0.8, 0.1, 0.1]), [32, 4, 4]);
        assert_eq!(apportion(10, [0.34, 0.33, 0.33]), [4, 3, 3]);
        assert_eq!(apportion(0, [0.8, 0.1, 0.1]), [0, 0, 0]);
        assert_eq!(apportion(1, [0.2, 0.3, 0.5]), [0, 0, 1]);
    }

    proptest::proptest! {
        #[test]
        fn splits_partition_the_sources(seed in 0u64..10_000, a in 1u32..20, b in 1u32..20, d in 1u32..20) {
            let total = f64::from(a + b + d);
            let ratios = [f64::from(a) / total, f64::from(b) / total, 1.0 - f64::from(a + b) / total];
            let c = make_splits(&unsplit_sample(), ratios, seed, false).unwrap();
            for task in Task::ALL {
                let s = c.task_splits(task).unwrap();
                let union: BTreeSet<_> = s.train.union(&s.valid).cloned().collect::<BTreeSet<_>>()
                    .union(&s.test).cloned().collect();
                let all: BTreeSet<_> = source_ids(&c, task).into_iter().collect();
                proptest::prop_assert_eq!(&union, &all);
                proptest::prop_assert_eq!(s.train.len() + s.valid.len() + s.test.len(), all.len());
            }
        }
    }
}
