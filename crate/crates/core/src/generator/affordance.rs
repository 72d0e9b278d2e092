use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GeneratorError;
use crate::corpus::{Affordance, ObjectCard};
use crate::text::{tokenize, Vocabulary};

const LABELS: usize = Affordance::ALL.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffordanceTrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the mean loss improves by less than this.
    pub tolerance: f64,
}

impl Default for AffordanceTrainConfig {
    fn default() -> Self {
        AffordanceTrainConfig {
            learning_rate: 2.0,
            max_epochs: 500,
            tolerance: 1e-5,
        }
    }
}

/// Seven independent logistic heads over L2-normalised binary
/// bag-of-words features of an object's name and description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffordanceModel {
    vocab: Vocabulary,
    /// Row-major, one row of `vocab.len()` weights per label.
    weights: Vec<f64>,
    bias: [f64; LABELS],
    pub thresholds: [f64; LABELS],
    /// Labels that were constant over the training set.
    pub degenerate: [bool; LABELS],
    pub epochs_run: [usize; LABELS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffordancePrediction {
    pub labels: Vec<Affordance>,
    pub probabilities: BTreeMap<Affordance, f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn object_text(name: &str, description: &str) -> String {
    format!("{name} {description}")
}

impl AffordanceModel {
    /// Model with all weights and biases at zero.
    pub fn zeros(vocab: Vocabulary) -> Self {
        AffordanceModel {
            weights: vec![0.0; vocab.len() * LABELS],
            vocab,
            bias: [0.0; LABELS],
            thresholds: [0.5; LABELS],
            degenerate: [false; LABELS],
            epochs_run: [0; LABELS],
        }
    }

    /// Sparse feature vector: distinct known tokens, each weighted 1/sqrt(n).
    fn features(&self, name: &str, description: &str) -> Vec<(usize, f64)> {
        let mut ids: Vec<usize> = tokenize(&object_text(name, description))
            .iter()
            .filter_map(|t| self.vocab.get(t))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let w = if ids.is_empty() {
            0.0
        } else {
            1.0 / (ids.len() as f64).sqrt()
        };
        ids.into_iter().map(|i| (i, w)).collect()
    }

    fn logit(&self, label: usize, x: &[(usize, f64)]) -> f64 {
        let row = &self.weights[label * self.vocab.len()..(label + 1) * self.vocab.len()];
        self.bias[label] + x.iter().map(|(i, v)| row[*i] * v).sum::<f64>()
    }

    pub fn probabilities(&self, name: &str, description: &str) -> [f64; LABELS] {
        let x = self.features(name, description);
        std::array::from_fn(|l| sigmoid(self.logit(l, &x)))
    }

    pub fn predict(&self, name: &str, description: &str) -> AffordancePrediction {
        self.predict_with(name, description, &self.thresholds)
    }

    /// Labels whose probability reaches the given per-label thresholds.
    pub fn predict_with(&self, name: &str, description: &str, thresholds: &[f64; LABELS]) -> AffordancePrediction {
        let p = self.probabilities(name, description);
        AffordancePrediction {
            labels: Affordance::ALL
                .into_iter()
                .filter(|a| p[a.index()] >= thresholds[a.index()])
                .collect(),
            probabilities: Affordance::ALL.into_iter().map(|a| (a, p[a.index()])).collect(),
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn weights_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|w| w.is_finite())
    }
}

/// Fit each head by full-batch gradient descent on the mean log loss.
pub fn train_affordance_model(
    objects: &[ObjectCard],
    config: &AffordanceTrainConfig,
) -> Result<AffordanceModel, GeneratorError> {
    if objects.is_empty() {
        return Err(GeneratorError::EmptyTrainingSet);
    }
    let texts: Vec<String> = objects.iter().map(|o| object_text(&o.name, &o.description)).collect();
    let mut model = AffordanceModel::zeros(Vocabulary::build(&texts));
    let xs: Vec<Vec<(usize, f64)>> = objects
        .iter()
        .map(|o| model.features(&o.name, &o.description))
        .collect();
    let n = objects.len() as f64;
    let v = model.vocab.len();

    for label in Affordance::ALL {
        let l = label.index();
        let ys: Vec<f64> = objects.iter().map(|o| f64::from(u8::from(o.has(label)))).collect();
        let positives = ys.iter().sum::<f64>();
        model.degenerate[l] = positives == 0.0 || positives == n;
        let mut prev = f64::INFINITY;
        let mut grad = vec![0.0; v];
        for epoch in 0..config.max_epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            let mut loss = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                let z = model.logit(l, x);
                let p = sigmoid(z);
                // Stable log loss: softplus(z) - y z.
                loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z;
                let d = p - y;
                gb += d;
                for (i, xv) in x {
                    grad[*i] += d * xv;
                }
            }
            loss /= n;
            model.epochs_run[l] = epoch + 1;
            if (prev - loss).abs() < config.tolerance {
                break;
            }
            prev = loss;
            let row = &mut model.weights[l * v..(l + 1) * v];
            for (w, g) in row.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g / n;
            }
            model.bias[l] -= config.learning_rate * gb / n;
        }
    }
    Ok(model)
}

/// Micro-averaged F1 of predicted label sets against the objects' labels.
pub fn micro_f1<F>(objects: &[ObjectCard], mut predict: F) -> f64
where
    F: FnMut(&ObjectCard) -> Vec<Affordance>,
{
    let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
    for o in objects {
        let pred = predict(o);
        for a in Affordance::ALL {
            match (pred.contains(&a), o.has(a)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fne += 1,
                _ => {}
            }
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fne) as f64
}

/// Per-label majority vote over `objects`: the labels held by more than half.
pub fn majority_labels(objects: &[ObjectCard]) -> Vec<Affordance> {
    Affordance::ALL
        .into_iter()
        .filter(|a| 2 * objects.iter().filter(|o| o.has(*a)).count() > objects.len())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sample_corpus;
    use proptest::prelude::*;

    fn obj(name: &str, desc: &str, aff: &[Affordance]) -> ObjectCard {
        ObjectCard {
            id: format!("obj_{}", name.replace(' ', "_")),
            name: name.into(),
            description: desc.into(),
            affordances: aff.to_vec(),
            contained_examples: vec![],
            size_tag: None,
            generated: false,
        }
    }

    #[test]
    fn separable_toy_set() {
        let objects = [
            obj("sword", "", &[Affordance::Gettable, Affordance::Wieldable]),
            obj("hat", "", &[Affordance::Gettable, Affordance::Wearable]),
        ];
        let model = train_affordance_model(&objects, &AffordanceTrainConfig::default()).unwrap();
        assert!(model.degenerate[Affordance::Gettable.index()]);
        assert!(model.degenerate[Affordance::Edible.index()]);
        assert!(!model.degenerate[Affordance::Wieldable.index()]);
        for o in &objects {
            assert_eq!(model.predict(&o.name, "").labels, o.affordances);
        }
        // Constant-positive head fires on unseen input.
        assert!(model.predict("zzz", "").labels.contains(&Affordance::Gettable));
        assert!(model.weights_finite());
    }

    #[test]
    fn zero_model_is_at_threshold() {
        let m = AffordanceModel::zeros(Vocabulary::build(["a"]));
        let p = m.predict("a", "");
        assert_eq!(p.labels.len(), 7);
        assert!(p.probabilities.values().all(|v| *v == 0.5));
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(matches!(
            train_affordance_model(&[], &AffordanceTrainConfig::default()),
            Err(GeneratorError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn duplicated_examples_give_same_probabilities() {
        let objects = [
            obj("sword", "sharp blade", &[Affordance::Gettable, Affordance::Wieldable]),
            obj("apple", "red fruit", &[Affordance::Gettable, Affordance::Edible]),
            obj("table", "wooden table", &[Affordance::Surface]),
        ];
        let twice: Vec<ObjectCard> = objects.iter().chain(objects.iter()).cloned().collect();
        let a = train_affordance_model(&objects, &AffordanceTrainConfig::default()).unwrap();
        let b = train_affordance_model(&twice, &AffordanceTrainConfig::default()).unwrap();
        for q in ["sword", "red apple", "table blade"] {
            let pa = a.probabilities(q, "");
            let pb = b.probabilities(q, "");
            for l in 0..LABELS {
                assert!((pa[l] - pb[l]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn sample_corpus_beats_majority() {
        let corpus = sample_corpus();
        let objects = corpus.objects();
        let model = train_affordance_model(objects, &AffordanceTrainConfig::default()).unwrap();
        let f1 = micro_f1(objects, |o| model.predict(&o.name, &o.description).labels);
        let majority = majority_labels(objects);
        let base = micro_f1(objects, |_| majority.clone());
        assert!(f1 > base, "{f1} vs {base}");
        let sword = model.predict("wooden sword", "");
        assert!(sword.labels.contains(&Affordance::Gettable));
        assert!(sword.labels.contains(&Affordance::Wieldable));
    }

    proptest! {
        #[test]
        fn lower_threshold_never_removes_labels(t in 0.0f64..1.0, dt in 0.0f64..0.5, q in "[a-z ]{0,20}") {
            let corpus = sample_corpus();
            let model = train_affordance_model(&corpus.objects()[..20], &AffordanceTrainConfig { max_epochs: 50, ..Default::default() }).unwrap();
            let hi = model.predict_with(&q, "", &[t; LABELS]).labels;
            let lo = model.predict_with(&q, "", &[(t - dt).max(0.0); LABELS]).labels;
            prop_assert!(hi.iter().all(|a| lo.contains(a)));
            prop_assert!(model.probabilities(&q, "").iter().all(|p| *p > 0.0 && *p < 1.0));
        }
    }
}
