use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Candidate, RankingError, Scorer, ScorerInput};
use crate::corpus::{PlacementExample, Task};
use crate::rng;
use crate::text::{normalize_name, tokenize, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingParams {
    pub dim: usize,
    /// L2 cap applied to every embedding row after each update.
    pub max_norm: f32,
    pub learning_rate: f32,
    /// Probability of dropping each context token during training.
    pub input_dropout: f64,
    pub margin: f32,
    /// Negatives sampled per positive.
    pub negatives: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Hash buckets for character n-gram vectors; 0 disables them.
    #[serde(default)]
    pub subword_buckets: usize,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            dim: 128,
            max_norm: 10.0,
            learning_rate: 0.01,
            input_dropout: 0.5,
            margin: 0.2,
            negatives: 10,
            epochs: 20,
            seed: 0,
            subword_buckets: 0,
        }
    }
}

impl EmbeddingParams {
    pub fn validate(&self) -> Result<(), RankingError> {
        let bad = |m: &str| Err(RankingError::InvalidParams(m.to_string()));
        if self.dim < 1 {
            return bad("dim must be at least 1");
        }
        if !(0.0..1.0).contains(&self.input_dropout) {
            return bad("input_dropout must lie in [0, 1)");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be positive");
        }
        if self.negatives < 1 {
            return bad("negatives must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.max_norm > 0.0 && self.max_norm.is_finite()) {
            return bad("max_norm must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    pub final_loss: Option<f64>,
    pub seed: u64,
    /// Tasks seen in training, sorted.
    #[serde(default)]
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean hinge loss over (example, negative) pairs.
    pub mean_loss: f64,
    /// Examples that contributed (an example whose context is fully dropped
    /// is skipped for that epoch).
    pub examples: usize,
}

/// Hash-bucketed character n-gram vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SubwordTable {
    pub buckets: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub rows: Vec<f32>,
}

impl SubwordTable {
    fn bucket_ids(&self, token: &str) -> Vec<usize> {
        let chars: Vec<char> = format!("<{token}>").chars().collect();
        let mut ids = Vec::new();
        for n in self.min_n..=self.max_n {
            for w in chars.windows(n) {
                let gram: String = w.iter().collect();
                ids.push((fnv1a(gram.as_bytes()) % self.buckets as u64) as usize);
            }
        }
        ids
    }

    fn average(&self, token: &str, dim: usize, out: &mut [f32]) -> bool {
        let ids = self.bucket_ids(token);
        if ids.is_empty() {
            return false;
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        for id in &ids {
            for (o, v) in out.iter_mut().zip(&self.rows[id * dim..(id + 1) * dim]) {
                *o += v;
            }
        }
        let inv = 1.0 / ids.len() as f32;
        out.iter_mut().for_each(|x| *x *= inv);
        true
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Bag-of-words embedding ranker: mean-pooled token vectors compared by
/// inner product, with context and candidates sharing one table.
#[derive(Debug)]
pub struct EmbeddingModel {
    pub(crate) params: EmbeddingParams,
    pub(crate) vocab: Vocabulary,
    pub(crate) rows: Vec<f32>,
    pub(crate) subword: Option<SubwordTable>,
    pub(crate) meta: TrainingMeta,
    pub(crate) frozen: bool,
    cache: RwLock<HashMap<String, Arc<Vec<f32>>>>,
}

const CACHE_LIMIT: usize = 50_000;

impl Clone for EmbeddingModel {
    fn clone(&self) -> Self {
        Self::assemble(
            self.params.clone(),
            self.vocab.clone(),
            self.rows.clone(),
            self.subword.clone(),
            self.meta.clone(),
            self.frozen,
        )
    }
}

impl PartialEq for EmbeddingModel {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.vocab == other.vocab
            && self.rows == other.rows
            && self.subword == other.subword
            && self.meta == other.meta
            && self.frozen == other.frozen
    }
}

fn uniform_rows(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<f32> {
    // Rows start with expected L2 norm close to 1.
    let a = (3.0 / dim as f32).sqrt();
    (0..n * dim).map(|_| rng.gen_range(-a..a)).collect()
}

impl EmbeddingModel {
    pub(crate) fn assemble(
        params: EmbeddingParams,
        vocab: Vocabulary,
        rows: Vec<f32>,
        subword: Option<SubwordTable>,
        meta: TrainingMeta,
        frozen: bool,
    ) -> Self {
        EmbeddingModel {
            params,
            vocab,
            rows,
            subword,
            meta,
            frozen,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Randomly initialised model over `vocab`. With subword buckets enabled,
    /// each token row starts as the mean of its n-gram bucket vectors.
    pub fn initialize(vocab: Vocabulary, params: &EmbeddingParams) -> Result<Self, RankingError> {
        params.validate()?;
        let dim = params.dim;
        let mut stream = rng::derived_stream(params.seed, "embedding-init", 0);
        let mut rows = uniform_rows(vocab.len(), dim, &mut stream);
        let subword = (params.subword_buckets > 0).then(|| SubwordTable {
            buckets: params.subword_buckets,
            min_n: 3,
            max_n: 5,
            rows: uniform_rows(params.subword_buckets, dim, &mut stream),
        });
        if let Some(table) = &subword {
            for (i, tok) in vocab.tokens().iter().enumerate() {
                table.average(tok, dim, &mut rows[i * dim..(i + 1) * dim]);
            }
        }
        let mut model = Self::assemble(
            params.clone(),
            vocab,
            rows,
            subword,
            TrainingMeta {
                seed: params.seed,
                ..TrainingMeta::default()
            },
            false,
        );
        for r in 0..model.vocab.len() {
            model.cap_row(r);
        }
        Ok(model)
    }

    /// Untrained ranker whose token vectors are frozen at their character
    /// n-gram average.
    pub fn subword_baseline(vocab: Vocabulary, params: &EmbeddingParams) -> Result<Self, RankingError> {
        if params.subword_buckets == 0 {
            return Err(RankingError::InvalidParams(
                "subword baseline needs subword_buckets > 0".into(),
            ));
        }
        let mut model = Self::initialize(vocab, params)?;
        model.frozen = true;
        Ok(model)
    }

    /// Build a model from explicit token vectors.
    pub fn from_rows(vocab: Vocabulary, params: &EmbeddingParams, rows: Vec<f32>) -> Result<Self, RankingError> {
        params.validate()?;
        if rows.len() != vocab.len() * params.dim {
            return Err(RankingError::InvalidParams(format!(
                "expected {} x {} matrix, got {} values",
                vocab.len(),
                params.dim,
                rows.len()
            )));
        }
        Ok(Self::assemble(
            params.clone(),
            vocab,
            rows,
            None,
            TrainingMeta {
                seed: params.seed,
                ..TrainingMeta::default()
            },
            false,
        ))
    }

    pub fn params(&self) -> &EmbeddingParams {
        &self.params
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn row(&self, index: usize) -> &[f32] {
        let d = self.params.dim;
        &self.rows[index * d..(index + 1) * d]
    }

    pub fn rows(&self) -> &[f32] {
        &self.rows
    }

    /// Largest L2 norm over token rows.
    pub fn max_row_norm(&self) -> f32 {
        (0..self.vocab.len()).map(|i| norm(self.row(i))).fold(0.0, f32::max)
    }

    fn cap_row(&mut self, index: usize) {
        let d = self.params.dim;
        let max = self.params.max_norm;
        let row = &mut self.rows[index * d..(index + 1) * d];
        let n = norm(row);
        if n > max {
            let s = max / n;
            row.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Mean of the token vectors of `text`. Unknown tokens use their n-gram
    /// average when subwords are enabled and are skipped otherwise.
    pub fn pool(&self, text: &str) -> Vec<f32> {
        let d = self.params.dim;
        let mut acc = vec![0.0f32; d];
        let mut count = 0usize;
        let mut scratch = vec![0.0f32; d];
        for tok in tokenize(text) {
            let v: &[f32] = match self.vocab.get(&tok) {
                Some(i) => self.row(i),
                None => match &self.subword {
                    Some(t) if t.average(&tok, d, &mut scratch) => &scratch,
                    _ => continue,
                },
            };
            acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
            count += 1;
        }
        if count > 0 {
            let inv = 1.0 / count as f32;
            acc.iter_mut().for_each(|a| *a *= inv);
        }
        acc
    }

    fn cached_pool(&self, text: &str) -> Arc<Vec<f32>> {
        if let Some(v) = self.cache.read().unwrap().get(text) {
            return Arc::clone(v);
        }
        let v = Arc::new(self.pool(text));
        let mut cache = self.cache.write().unwrap();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(text.to_string(), Arc::clone(&v));
        v
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        f64::from(dot(&self.cached_pool(a), &self.cached_pool(b)))
    }
}

impl Scorer for EmbeddingModel {
    fn name(&self) -> String {
        if self.frozen {
            "fasttext".into()
        } else {
            "embedding".into()
        }
    }

    fn score(&self, input: &ScorerInput, _rng: &mut dyn RngCore) -> Result<Vec<f64>, RankingError> {
        input.check()?;
        let ctx = self.cached_pool(&input.context_text);
        Ok(input
            .candidates
            .iter()
            .map(|c| f64::from(dot(&ctx, &self.cached_pool(&c.text))))
            .collect())
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f32]) -> f32 {
    dot(a, a).sqrt()
}

/// Fit vocabulary and embeddings on (possibly multi-task) examples.
///
/// `pools` lists the negative-sampling candidates of each task; every task
/// present in `examples` needs a pool with at least one non-gold entry.
pub fn train_embedding_scorer(
    examples: &[PlacementExample],
    pools: &BTreeMap<Task, Vec<Candidate>>,
    params: &EmbeddingParams,
) -> Result<(EmbeddingModel, Vec<EpochLoss>), RankingError> {
    params.validate()?;
    if examples.is_empty() {
        return Err(RankingError::NoExamples);
    }
    let docs = examples
        .iter()
        .map(|e| e.context_text.as_str())
        .chain(examples.iter().map(|e| e.gold.as_str()))
        .chain(pools.values().flatten().map(|c| c.text.as_str()));
    let vocab = Vocabulary::build(docs);
    let model = EmbeddingModel::initialize(vocab, params)?;
    train_from(model, examples, pools, params)
}

struct PreparedExample {
    task: Task,
    context: Vec<usize>,
    gold: Vec<usize>,
    gold_key: String,
}

struct PreparedPool {
    keys: Vec<String>,
    tokens: Vec<Vec<usize>>,
}

/// Continue training an existing model. Vocabulary and dimension come from
/// `model`; the optimisation settings and seed from `params`.
pub fn train_from(
    mut model: EmbeddingModel,
    examples: &[PlacementExample],
    pools: &BTreeMap<Task, Vec<Candidate>>,
    params: &EmbeddingParams,
) -> Result<(EmbeddingModel, Vec<EpochLoss>), RankingError> {
    params.validate()?;
    if examples.is_empty() {
        return Err(RankingError::NoExamples);
    }
    if params.dim != model.params.dim {
        return Err(RankingError::InvalidParams(format!(
            "dimension {} does not match model dimension {}",
            params.dim, model.params.dim
        )));
    }

    let prepared_pools: BTreeMap<Task, PreparedPool> = pools
        .iter()
        .map(|(task, cands)| {
            let pool = PreparedPool {
                keys: cands.iter().map(|c| normalize_name(&c.name)).collect(),
                tokens: cands.iter().map(|c| model.vocab.encode(&c.text)).collect(),
            };
            (*task, pool)
        })
        .collect();

    let mut prepared = Vec::with_capacity(examples.len());
    for e in examples {
        let pool = prepared_pools.get(&e.task).ok_or(RankingError::EmptyPool(e.task))?;
        let gold_key = normalize_name(&e.gold);
        if !pool.keys.iter().any(|k| *k != gold_key) {
            return Err(RankingError::EmptyPool(e.task));
        }
        let gold = match pool.keys.iter().position(|k| *k == gold_key) {
            Some(i) => pool.tokens[i].clone(),
            None => model.vocab.encode(&e.gold),
        };
        prepared.push(PreparedExample {
            task: e.task,
            context: model.vocab.encode(&e.context_text),
            gold,
            gold_key,
        });
    }

    let mut trace = Vec::with_capacity(params.epochs);
    if model.frozen {
        return Ok((model, trace));
    }
    let d = params.dim;
    let k = params.negatives;
    let lr = params.learning_rate;
    let margin = params.margin;
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut u = vec![0.0f32; d];
    let mut g = vec![0.0f32; d];
    let mut du = vec![0.0f32; d];
    let mut negs: Vec<(usize, Vec<f32>)> = Vec::with_capacity(k);
    let mut kept = Vec::new();
    let mut touched = Vec::new();
    model.params.learning_rate = params.learning_rate;
    model.params.input_dropout = params.input_dropout;
    model.params.margin = params.margin;
    model.params.negatives = params.negatives;
    model.params.max_norm = params.max_norm;

    for epoch in 0..params.epochs {
        let mut stream = rng::derived_stream(params.seed, "embedding-epoch", epoch as u64);
        shuffle(&mut order, &mut stream);
        let mut total = 0.0f64;
        let mut used = 0usize;
        for &ei in &order {
            let ex = &prepared[ei];
            let pool = &prepared_pools[&ex.task];
            kept.clear();
            for &t in &ex.context {
                if stream.gen::<f64>() >= params.input_dropout {
                    kept.push(t);
                }
            }
            if kept.is_empty() || ex.gold.is_empty() {
                continue;
            }
            used += 1;
            mean_rows(&model, &kept, &mut u);
            mean_rows(&model, &ex.gold, &mut g);
            let pos = dot(&u, &g);
            negs.clear();
            du.iter_mut().for_each(|x| *x = 0.0);
            let mut active = 0usize;
            for _ in 0..k {
                let ni = loop {
                    let i = stream.gen_range(0..pool.keys.len());
                    if pool.keys[i] != ex.gold_key {
                        break i;
                    }
                };
                let mut nv = vec![0.0f32; d];
                mean_rows(&model, &pool.tokens[ni], &mut nv);
                let loss = margin - pos + dot(&u, &nv);
                if loss > 0.0 {
                    total += f64::from(loss);
                    active += 1;
                    du.iter_mut()
                        .zip(nv.iter().zip(&g))
                        .for_each(|(a, (n, gv))| *a += n - gv);
                    negs.push((ni, nv));
                }
            }
            if active == 0 {
                continue;
            }
            touched.clear();
            let scale = lr / kept.len() as f32;
            for &t in &kept {
                axpy(&mut model, t, -scale, &du);
                touched.push(t);
            }
            let scale = lr * active as f32 / ex.gold.len() as f32;
            for &t in &ex.gold {
                axpy(&mut model, t, scale, &u);
                touched.push(t);
            }
            for (ni, _) in &negs {
                let toks = &pool.tokens[*ni];
                if toks.is_empty() {
                    continue;
                }
                let scale = lr / toks.len() as f32;
                for &t in toks {
                    axpy(&mut model, t, -scale, &u);
                    touched.push(t);
                }
            }
            for &t in &touched {
                model.cap_row(t);
            }
        }
        let mean = if used == 0 { 0.0 } else { total / (used * k) as f64 };
        trace.push(EpochLoss {
            epoch,
            mean_loss: mean,
            examples: used,
        });
    }
    model.meta = TrainingMeta {
        epochs_run: model.meta.epochs_run + params.epochs,
        final_loss: trace.last().map(|l| l.mean_loss),
        seed: params.seed,
        tasks: {
            let mut tasks = model.meta.tasks.clone();
            tasks.extend(examples.iter().map(|e| e.task));
            tasks.sort();
            tasks.dedup();
            tasks
        },
    };
    model.cache.write().unwrap().clear();
    Ok((model, trace))
}

fn shuffle(order: &mut [usize], stream: &mut impl Rng) {
    for i in (1..order.len()).rev() {
        let j = stream.gen_range(0..=i);
        order.swap(i, j);
    }
}

fn mean_rows(model: &EmbeddingModel, tokens: &[usize], out: &mut [f32]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    if tokens.is_empty() {
        return;
    }
    for &t in tokens {
        out.iter_mut().zip(model.row(t)).for_each(|(o, v)| *o += v);
    }
    let inv = 1.0 / tokens.len() as f32;
    out.iter_mut().for_each(|x| *x *= inv);
}

fn axpy(model: &mut EmbeddingModel, row: usize, alpha: f32, x: &[f32]) {
    let d = model.params.dim;
    model.rows[row * d..(row + 1) * d]
        .iter_mut()
        .zip(x)
        .for_each(|(r, v)| *r += alpha * v);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use crate::ranking::rank;
    use crate::rng::stream;

    fn example(ctx: &str, gold: &str) -> PlacementExample {
        PlacementExample {
            task: Task::Location,
            split: Split::Train,
            context_text: ctx.into(),
            gold: gold.into(),
            source_id: "s".into(),
        }
    }

    fn pools(names: &[&str]) -> BTreeMap<Task, Vec<Candidate>> {
        BTreeMap::from([(Task::Location, names.iter().map(|n| Candidate::named(*n)).collect())])
    }

    fn params() -> EmbeddingParams {
        EmbeddingParams {
            dim: 8,
            input_dropout: 0.0,
            negatives: 1,
            epochs: 1,
            seed: 3,
            ..EmbeddingParams::default()
        }
    }

    #[test]
    fn params_validation() {
        assert!(EmbeddingParams::default().validate().is_ok());
        for p in [
            EmbeddingParams { dim: 0, ..params() },
            EmbeddingParams {
                input_dropout: 1.0,
                ..params()
            },
            EmbeddingParams {
                margin: 0.0,
                ..params()
            },
            EmbeddingParams {
                negatives: 0,
                ..params()
            },
        ] {
            assert!(matches!(p.validate(), Err(RankingError::InvalidParams(_))));
        }
    }

    #[test]
    fn self_score_is_squared_pooled_norm() {
        let (model, _) = train_embedding_scorer(
            &[example("old mill", "river bank")],
            &pools(&["river bank", "dry desert"]),
            &EmbeddingParams { epochs: 2, ..params() },
        )
        .unwrap();
        let text = "old mill river";
        let input = ScorerInput::new(
            Task::Location,
            text,
            vec![Candidate::named(text), Candidate::named("dry desert")],
        );
        let scores = model.score(&input, &mut stream(0)).unwrap();
        let p = model.pool(text);
        let sq: f32 = p.iter().map(|x| x * x).sum();
        assert!((scores[0] - f64::from(sq)).abs() < 1e-9);
    }

    #[test]
    fn zero_loss_leaves_parameters_unchanged() {
        // Tokens: a (context), b (gold), c (negative); gold aligned with the
        // context, negative orthogonal, so the hinge is inactive.
        let vocab = Vocabulary::build(["a", "b", "c"]);
        let p = EmbeddingParams { dim: 2, ..params() };
        let rows = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let model = EmbeddingModel::from_rows(vocab, &p, rows.clone()).unwrap();
        let (trained, trace) = train_from(model, &[example("a", "b")], &pools(&["b", "c"]), &p).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].mean_loss, 0.0);
        assert_eq!(trained.rows(), &rows[..]);
    }

    #[test]
    fn separable_pair_reaches_margin() {
        let p = EmbeddingParams {
            dim: 4,
            epochs: 1,
            ..params()
        };
        let vocab = Vocabulary::build(["x", "y"]);
        let mut model = EmbeddingModel::initialize(vocab, &p).unwrap();
        let ex = [example("x", "x")];
        let pool = pools(&["x", "y"]);
        let gap = |m: &EmbeddingModel| m.similarity("x", "x") - m.similarity("x", "y");
        let mut epochs = 0;
        while gap(&model) < f64::from(p.margin) {
            model = train_from(model, &ex, &pool, &p).unwrap().0;
            epochs += 1;
            assert!(epochs < 10_000, "did not separate");
        }
        assert!(gap(&model) >= f64::from(p.margin));
    }

    #[test]
    fn norms_stay_capped() {
        let p = EmbeddingParams {
            dim: 4,
            max_norm: 0.5,
            learning_rate: 1.0,
            epochs: 30,
            negatives: 3,
            ..params()
        };
        let (model, trace) =
            train_embedding_scorer(&[example("x y", "z"), example("y", "w")], &pools(&["z", "w", "v"]), &p).unwrap();
        assert_eq!(trace.len(), 30);
        assert!(model.max_row_norm() <= 0.5 + 1e-6);
    }

    #[test]
    fn training_is_deterministic() {
        let ex = [example("a b c", "d"), example("b c", "e"), example("c a", "d")];
        let pool = pools(&["d", "e", "f", "g"]);
        let p = EmbeddingParams {
            dim: 16,
            negatives: 3,
            epochs: 5,
            input_dropout: 0.5,
            ..params()
        };
        let a = train_embedding_scorer(&ex, &pool, &p).unwrap();
        let b = train_embedding_scorer(&ex, &pool, &p).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let other = EmbeddingParams { seed: 4, ..p };
        assert_ne!(train_embedding_scorer(&ex, &pool, &other).unwrap().0.rows(), a.0.rows());
    }

    #[test]
    fn pool_without_negatives_is_an_error() {
        let err = train_embedding_scorer(&[example("a", "b")], &pools(&["b"]), &params()).unwrap_err();
        assert!(matches!(err, RankingError::EmptyPool(Task::Location)));
        let err = train_embedding_scorer(&[example("a", "b")], &BTreeMap::new(), &params()).unwrap_err();
        assert!(matches!(err, RankingError::EmptyPool(Task::Location)));
        assert!(matches!(
            train_embedding_scorer(&[], &pools(&["b"]), &params()),
            Err(RankingError::NoExamples)
        ));
    }

    #[test]
    fn subword_baseline_is_frozen_and_handles_unknown_tokens() {
        let p = EmbeddingParams {
            dim: 8,
            subword_buckets: 64,
            ..params()
        };
        let vocab = Vocabulary::build(["wizard tower", "fishing dock"]);
        let model = EmbeddingModel::subword_baseline(vocab, &p).unwrap();
        assert_eq!(model.name(), "fasttext");
        assert!(model.pool("wizards").iter().any(|x| *x != 0.0));
        let input = ScorerInput::new(
            Task::Location,
            "wizard",
            vec![Candidate::named("fishing dock"), Candidate::named("wizard tower")],
        );
        assert_eq!(rank(&model, &input, &mut stream(0)).unwrap().len(), 2);
        let (same, trace) = train_from(
            model.clone(),
            &[example("wizard", "fishing dock")],
            &pools(&["fishing dock", "wizard tower"]),
            &p,
        )
        .unwrap();
        assert!(trace.is_empty());
        assert_eq!(same, model);
        assert!(EmbeddingModel::subword_baseline(Vocabulary::build(["a"]), &params()).is_err());
    }
}
