//! Grid world construction and batch analytics.
//!
//! A world starts from a random location in the centre cell and grows
//! breadth-first: every placed location tries each of its open directions,
//! receiving either a random filler or the best unused location according to
//! the location scorer. Each placed location is then populated with
//! characters and objects, and container objects are filled last.

mod diversity;
mod export;
mod grid;
mod validate;

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, FeatureMode, Task};
use crate::ranking::{rank, rank_scores, Candidate, RankingError, Scorer, ScorerInput};
use crate::rng::{self, StreamRng};
use crate::text::normalize_name;

pub use diversity::{diversity_report, Coverage, DiversityReport};
pub use export::ExportError;
pub use grid::{Cell, CellState, Direction, ElementRef, PlacedLocation, PlacedObject, WorldGrid};
pub use validate::{validate_world, WorldIssue, WorldIssueCode, WorldReport};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("corpus has no non-filler locations")]
    NoLocations,
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub grid_width: usize,
    pub grid_height: usize,
    /// Maximum number of placed locations.
    pub max_locations: usize,
    pub filler_prob: f64,
    /// Fraction of cells blocked before growth starts.
    pub blocked_fraction: f64,
    pub extra_connect_prob: f64,
    /// Stop expanding a location once no unused candidate scores above this.
    pub min_score_threshold: Option<f64>,
    pub max_characters: usize,
    pub max_objects: usize,
    pub max_contained: usize,
    /// Success probability of the truncated geometric population counts.
    pub count_success_prob: f64,
    pub feature_mode: FeatureMode,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            grid_width: 9,
            grid_height: 9,
            max_locations: 50,
            filler_prob: 0.15,
            blocked_fraction: 0.1,
            extra_connect_prob: 0.5,
            min_score_threshold: None,
            max_characters: 15,
            max_objects: 15,
            max_contained: 3,
            count_success_prob: 0.5,
            feature_mode: FeatureMode::NameAndDescription,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn cells(&self) -> usize {
        self.grid_width * self.grid_height
    }

    pub fn blocked_cells(&self) -> usize {
        let n = (self.blocked_fraction * self.cells() as f64).floor() as usize;
        // The centre is never blocked.
        n.min(self.cells().saturating_sub(1))
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        let bad = |m: String| Err(AssemblyError::Infeasible(m));
        if self.grid_width == 0 || self.grid_height == 0 {
            return bad("grid must have at least one cell".into());
        }
        if !(0.0..=1.0).contains(&self.filler_prob) {
            return bad(format!("filler_prob {} outside [0, 1]", self.filler_prob));
        }
        if !(0.0..=1.0).contains(&self.extra_connect_prob) {
            return bad(format!("extra_connect_prob {} outside [0, 1]", self.extra_connect_prob));
        }
        if !(0.0..1.0).contains(&self.blocked_fraction) {
            return bad(format!("blocked_fraction {} outside [0, 1)", self.blocked_fraction));
        }
        if !(self.count_success_prob > 0.0 && self.count_success_prob <= 1.0) {
            return bad("count_success_prob must lie in (0, 1]".into());
        }
        let usable = self.cells() - self.blocked_cells();
        if self.max_locations < 1 || self.max_locations > usable {
            return bad(format!(
                "max_locations {} must lie in 1..={usable} for a {}x{} grid",
                self.max_locations, self.grid_width, self.grid_height
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Scorer name per task.
    pub scorers: BTreeMap<Task, String>,
    pub corpus_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameWorld {
    pub grid: WorldGrid,
    pub config: GenerationConfig,
    pub provenance: Provenance,
    /// RFC 3339 creation time; left unset for reproducible exports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

impl GameWorld {
    pub fn location_count(&self) -> usize {
        self.grid.filled_count()
    }
}

/// One scorer per placement task.
#[derive(Clone, Copy)]
pub struct ScorerSet<'a> {
    pub location: &'a dyn Scorer,
    pub character: &'a dyn Scorer,
    pub object: &'a dyn Scorer,
    pub container: &'a dyn Scorer,
}

impl<'a> ScorerSet<'a> {
    /// The same (multi-task) scorer for every task.
    pub fn uniform(scorer: &'a dyn Scorer) -> Self {
        ScorerSet {
            location: scorer,
            character: scorer,
            object: scorer,
            container: scorer,
        }
    }

    pub fn names(&self) -> BTreeMap<Task, String> {
        BTreeMap::from([
            (Task::Location, self.location.name()),
            (Task::Character, self.character.name()),
            (Task::Object, self.object.name()),
            (Task::Container, self.container.name()),
        ])
    }

    pub fn get(&self, task: Task) -> &'a dyn Scorer {
        match task {
            Task::Location => self.location,
            Task::Character => self.character,
            Task::Object => self.object,
            Task::Container => self.container,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    id: String,
    name: String,
    candidate: Candidate,
    is_container: bool,
}

fn dedupe(entries: impl Iterator<Item = Entry>) -> Vec<Entry> {
    let mut seen = HashSet::new();
    entries.filter(|e| seen.insert(normalize_name(&e.name))).collect()
}

/// Precomputed candidate lists for repeated world generation over one
/// corpus.
pub struct WorldBuilder<'a> {
    scorers: ScorerSet<'a>,
    mode: FeatureMode,
    corpus_hash: String,
    locations: Vec<Entry>,
    fillers: Vec<Entry>,
    characters: Vec<Entry>,
    objects: Vec<Entry>,
}

impl<'a> WorldBuilder<'a> {
    pub fn new(corpus: &Corpus, scorers: ScorerSet<'a>, mode: FeatureMode) -> Result<Self, AssemblyError> {
        let loc = |c: &crate::corpus::LocationCard| Entry {
            id: c.id.clone(),
            name: c.name.clone(),
            candidate: Candidate::new(&c.name, mode.render(&c.name, &c.description)),
            is_container: false,
        };
        let locations = dedupe(corpus.locations().iter().map(loc));
        if locations.is_empty() {
            return Err(AssemblyError::NoLocations);
        }
        Ok(WorldBuilder {
            scorers,
            mode,
            corpus_hash: corpus.content_hash(),
            locations,
            fillers: corpus.filler_locations().iter().map(loc).collect(),
            characters: dedupe(corpus.characters().iter().map(|c| Entry {
                id: c.id.clone(),
                name: c.name.clone(),
                candidate: Candidate::new(&c.name, mode.render(&c.name, &c.description)),
                is_container: false,
            })),
            objects: dedupe(corpus.objects().iter().map(|c| Entry {
                id: c.id.clone(),
                name: c.name.clone(),
                candidate: Candidate::new(&c.name, mode.render(&c.name, &c.description)),
                is_container: c.is_container(),
            })),
        })
    }

    pub fn feature_mode(&self) -> FeatureMode {
        self.mode
    }

    /// Generate one world. Deterministic in (corpus, scorers, config).
    pub fn build(&self, config: &GenerationConfig) -> Result<GameWorld, AssemblyError> {
        config.validate()?;
        let mut stream = rng::derived_stream(config.seed, "world", 0);
        let mut grid = WorldGrid::new(config.grid_width, config.grid_height);
        let center = grid.center();

        let others: Vec<usize> = (0..grid.len()).filter(|&i| i != center).collect();
        for j in sample(&mut stream, others.len(), config.blocked_cells()) {
            grid.cells[others[j]].state = CellState::Blocked;
        }

        let mut used = vec![false; self.locations.len()];
        let first = stream.gen_range(0..self.locations.len());
        used[first] = true;
        let placed = self.place(&self.locations[first], false, config, &mut stream)?;
        grid.cells[center].state = CellState::Filled { location: placed };
        let mut count = 1;
        let mut text_of = vec![None; grid.len()];
        text_of[center] = Some(self.locations[first].candidate.text.clone());

        let mut frontier = VecDeque::from([center]);
        'grow: while let Some(cell) = frontier.pop_front() {
            if count >= config.max_locations {
                break;
            }
            let mut dirs = Direction::ALL;
            dirs.shuffle(&mut stream);
            for dir in dirs {
                if count >= config.max_locations {
                    break 'grow;
                }
                let Some(target) = grid.neighbor(cell, dir) else {
                    continue;
                };
                if !grid.cells[target].is_empty() {
                    continue;
                }
                let use_filler = !self.fillers.is_empty() && stream.gen::<f64>() < config.filler_prob;
                let (entry, is_filler) = if use_filler {
                    (&self.fillers[stream.gen_range(0..self.fillers.len())], true)
                } else {
                    let open: Vec<usize> = (0..self.locations.len()).filter(|&i| !used[i]).collect();
                    if open.is_empty() {
                        continue;
                    }
                    let input = ScorerInput::new(
                        Task::Location,
                        text_of[cell].clone().unwrap_or_default(),
                        open.iter().map(|&i| self.locations[i].candidate.clone()).collect(),
                    );
                    let scores = self.scorers.location.score(&input, &mut stream)?;
                    let best = rank_scores(&scores)[0];
                    if let Some(t) = config.min_score_threshold {
                        if scores[best] <= t {
                            break;
                        }
                    }
                    used[open[best]] = true;
                    (&self.locations[open[best]], false)
                };
                let placed = self.place(entry, is_filler, config, &mut stream)?;
                grid.cells[target].state = CellState::Filled { location: placed };
                text_of[target] = Some(entry.candidate.text.clone());
                grid.set_exit(cell, dir, true);
                for other in Direction::ALL {
                    if other == dir.opposite() {
                        continue;
                    }
                    if let Some(n) = grid.neighbor(target, other) {
                        if grid.cells[n].is_filled() && stream.gen::<f64>() < config.extra_connect_prob {
                            grid.set_exit(target, other, true);
                        }
                    }
                }
                count += 1;
                frontier.push_back(target);
            }
        }

        for i in 0..grid.len() {
            if let Some(loc) = grid.cells[i].location_mut() {
                let filled = self.fill_containers(std::mem::replace(loc, empty_location()), config, &mut stream)?;
                *loc = filled;
            }
        }

        Ok(GameWorld {
            grid,
            config: config.clone(),
            provenance: Provenance {
                scorers: self.scorers.names(),
                corpus_hash: self.corpus_hash.clone(),
            },
            created_at: None,
        })
    }

    fn place(
        &self,
        entry: &Entry,
        is_filler: bool,
        config: &GenerationConfig,
        stream: &mut StreamRng,
    ) -> Result<PlacedLocation, AssemblyError> {
        let location = PlacedLocation {
            id: entry.id.clone(),
            name: entry.name.clone(),
            is_filler,
            characters: Vec::new(),
            objects: Vec::new(),
        };
        self.populate(location, &entry.candidate.text, config, stream)
    }

    /// Add the top-ranked characters and objects for a location, with counts
    /// drawn from truncated geometric distributions.
    pub fn populate(
        &self,
        location: PlacedLocation,
        context: &str,
        config: &GenerationConfig,
        stream: &mut StreamRng,
    ) -> Result<PlacedLocation, AssemblyError> {
        let n_chars = truncated_geometric(stream, config.count_success_prob, config.max_characters);
        let n_objs = truncated_geometric(stream, config.count_success_prob, config.max_objects);
        self.populate_counts(location, context, n_chars, n_objs, stream)
    }

    /// Replace the location's characters and objects with the `n_chars` and
    /// `n_objs` top-ranked candidates for `context`.
    pub fn populate_counts(
        &self,
        mut location: PlacedLocation,
        context: &str,
        n_chars: usize,
        n_objs: usize,
        stream: &mut StreamRng,
    ) -> Result<PlacedLocation, AssemblyError> {
        location.characters = self
            .top(
                self.scorers.character,
                Task::Character,
                &self.characters,
                context,
                n_chars,
                None,
                stream,
            )?
            .into_iter()
            .map(|e| ElementRef {
                id: e.id.clone(),
                name: e.name.clone(),
            })
            .collect();
        location.objects = self
            .top(
                self.scorers.object,
                Task::Object,
                &self.objects,
                context,
                n_objs,
                None,
                stream,
            )?
            .into_iter()
            .map(|e| PlacedObject {
                id: e.id.clone(),
                name: e.name.clone(),
                is_container: e.is_container,
                contents: Vec::new(),
            })
            .collect();
        Ok(location)
    }

    /// Give every container object of `location` a list of contained objects.
    /// Contents are leaves; non-containers are left untouched.
    pub fn fill_containers(
        &self,
        mut location: PlacedLocation,
        config: &GenerationConfig,
        stream: &mut StreamRng,
    ) -> Result<PlacedLocation, AssemblyError> {
        for obj in location.objects.iter_mut().filter(|o| o.is_container) {
            let n = truncated_geometric(stream, config.count_success_prob, config.max_contained);
            self.fill_container(obj, n, stream)?;
        }
        Ok(location)
    }

    /// Set a container's contents to the `n` top-ranked other objects.
    /// Non-containers are left unchanged.
    pub fn fill_container(
        &self,
        obj: &mut PlacedObject,
        n: usize,
        stream: &mut StreamRng,
    ) -> Result<(), AssemblyError> {
        if !obj.is_container {
            return Ok(());
        }
        obj.contents = self
            .top(
                self.scorers.container,
                Task::Container,
                &self.objects,
                &obj.name,
                n,
                Some(&obj.id),
                stream,
            )?
            .into_iter()
            .map(|e| ElementRef {
                id: e.id.clone(),
                name: e.name.clone(),
            })
            .collect();
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn top<'e>(
        &self,
        scorer: &dyn Scorer,
        task: Task,
        pool: &'e [Entry],
        context: &str,
        n: usize,
        exclude: Option<&str>,
        stream: &mut StreamRng,
    ) -> Result<Vec<&'e Entry>, AssemblyError> {
        if n == 0 {
            return Ok(Vec::new());
        }
        let entries: Vec<&Entry> = pool.iter().filter(|e| Some(e.id.as_str()) != exclude).collect();
        if entries.is_empty() {
            return Ok(Vec::new());
        }
        // Container candidates are always name-only.
        let candidates = entries
            .iter()
            .map(|e| match task {
                Task::Container => Candidate::named(e.name.clone()),
                _ => e.candidate.clone(),
            })
            .collect();
        let input = ScorerInput::new(task, context, candidates);
        let order = rank(scorer, &input, stream)?;
        Ok(order.into_iter().take(n).map(|i| entries[i]).collect())
    }

    /// `count` worlds with seeds `config.seed + i`, generated in parallel.
    pub fn build_batch(&self, config: &GenerationConfig, count: usize) -> Result<Vec<GameWorld>, AssemblyError> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let cfg = GenerationConfig {
                    seed: config.seed.wrapping_add(i as u64),
                    ..config.clone()
                };
                self.build(&cfg)
            })
            .collect()
    }
}

fn empty_location() -> PlacedLocation {
    PlacedLocation {
        id: String::new(),
        name: String::new(),
        is_filler: false,
        characters: Vec::new(),
        objects: Vec::new(),
    }
}

/// Geometric count (failures before the first success) conditioned on
/// being at most `cap`, sampled by inversion.
pub fn truncated_geometric(stream: &mut impl Rng, p: f64, cap: usize) -> usize {
    if cap == 0 || p >= 1.0 {
        return 0;
    }
    let q = 1.0 - p;
    let total = 1.0 - q.powi(cap as i32 + 1);
    let u = stream.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut mass = p;
    for k in 0..cap {
        acc += mass;
        if u < acc {
            return k;
        }
        mass *= q;
    }
    cap
}

/// Generate one world from a corpus.
pub fn create_world(
    corpus: &Corpus,
    scorers: ScorerSet<'_>,
    config: &GenerationConfig,
) -> Result<GameWorld, AssemblyError> {
    WorldBuilder::new(corpus, scorers, config.feature_mode)?.build(config)
}

pub fn create_worlds(
    corpus: &Corpus,
    scorers: ScorerSet<'_>,
    config: &GenerationConfig,
    count: usize,
) -> Result<Vec<GameWorld>, AssemblyError> {
    WorldBuilder::new(corpus, scorers, config.feature_mode)?.build_batch(config, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sample_corpus;
    use crate::ranking::{FixedOrderScorer, IrScorer, RandomScorer};
    use crate::rng::stream;

    fn config(seed: u64) -> GenerationConfig {
        GenerationConfig {
            seed,
            ..GenerationConfig::default()
        }
    }

    #[test]
    fn config_feasibility() {
        assert!(config(0).validate().is_ok());
        let c = GenerationConfig {
            grid_width: 3,
            grid_height: 3,
            max_locations: 10,
            blocked_fraction: 0.0,
            ..config(0)
        };
        assert!(matches!(c.validate(), Err(AssemblyError::Infeasible(_))));
        let c = GenerationConfig {
            filler_prob: 1.5,
            ..config(0)
        };
        assert!(c.validate().is_err());
        let c = GenerationConfig {
            blocked_fraction: 1.0,
            ..config(0)
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_location_world() {
        let corpus = sample_corpus();
        let world = create_world(
            &corpus,
            ScorerSet::uniform(&RandomScorer),
            &GenerationConfig {
                max_locations: 1,
                ..config(3)
            },
        )
        .unwrap();
        assert_eq!(world.location_count(), 1);
        let center = &world.grid.cells[world.grid.center()];
        assert!(center.is_filled());
        assert!(!center.location().unwrap().is_filler);
        assert!(world.grid.exit_pairs().is_empty());
    }

    #[test]
    fn all_fillers_when_probability_is_one() {
        let corpus = sample_corpus();
        let world = create_world(
            &corpus,
            ScorerSet::uniform(&RandomScorer),
            &GenerationConfig {
                filler_prob: 1.0,
                ..config(5)
            },
        )
        .unwrap();
        let center = world.grid.center();
        for (i, loc) in world.grid.filled() {
            assert_eq!(loc.is_filler, i != center, "cell {i}");
        }
        assert!(world.location_count() > 1);
    }

    #[test]
    fn worlds_are_deterministic_and_valid() {
        let corpus = sample_corpus();
        let ir = IrScorer::fit_corpus(&corpus, FeatureMode::NameAndDescription);
        let builder = WorldBuilder::new(&corpus, ScorerSet::uniform(&ir), FeatureMode::NameAndDescription).unwrap();
        for seed in 0..20 {
            let a = builder.build(&config(seed)).unwrap();
            let b = builder.build(&config(seed)).unwrap();
            assert_eq!(a.export_json(), b.export_json());
            let report = validate_world(&a, Some(&corpus));
            assert!(report.is_clean(), "seed {seed}: {:?}", report.issues);
        }
    }

    #[test]
    fn export_round_trips() {
        let corpus = sample_corpus();
        let ir = IrScorer::fit_corpus(&corpus, FeatureMode::NameAndDescription);
        let builder = WorldBuilder::new(&corpus, ScorerSet::uniform(&ir), FeatureMode::NameAndDescription).unwrap();
        for seed in 0..5 {
            let mut world = builder.build(&config(seed)).unwrap();
            world.created_at = Some("2024-01-01T00:00:00Z".into());
            let back = GameWorld::from_export_json(&world.export_json()).unwrap();
            assert_eq!(back, world);
        }
        assert!(GameWorld::from_export_json("{}").is_err());
        let json = builder
            .build(&config(0))
            .unwrap()
            .export_json()
            .replace("\"filled\"", "\"lava\"");
        assert!(matches!(
            GameWorld::from_export_json(&json),
            Err(ExportError::Malformed(_))
        ));
    }

    #[test]
    fn populate_takes_top_ranked_objects() {
        let corpus = sample_corpus();
        let objects = FixedOrderScorer::new(["candle", "backpack"]);
        let scorers = ScorerSet {
            location: &RandomScorer,
            character: &RandomScorer,
            object: &objects,
            container: &RandomScorer,
        };
        let builder = WorldBuilder::new(&corpus, scorers, FeatureMode::NameOnly).unwrap();
        let town = PlacedLocation {
            id: "loc_town_of_anoria".into(),
            name: "Town of Anoria".into(),
            is_filler: false,
            characters: vec![],
            objects: vec![],
        };
        let placed = builder
            .populate_counts(town, "Town of Anoria", 0, 1, &mut stream(1))
            .unwrap();
        assert!(placed.characters.is_empty());
        let names: Vec<&str> = placed.objects.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, ["candle"]);
    }

    #[test]
    fn fill_containers_uses_container_scorer() {
        let corpus = sample_corpus();
        let contents = FixedOrderScorer::new(["coins", "eyeglasses"]);
        let scorers = ScorerSet {
            location: &RandomScorer,
            character: &RandomScorer,
            object: &RandomScorer,
            container: &contents,
        };
        let builder = WorldBuilder::new(&corpus, scorers, FeatureMode::NameOnly).unwrap();
        let pouch = corpus.object_by_name("pouch").unwrap();
        let candle = corpus.object_by_name("candle").unwrap();
        let loc = PlacedLocation {
            id: "loc_x".into(),
            name: "x".into(),
            is_filler: false,
            characters: vec![],
            objects: [pouch, candle]
                .map(|o| PlacedObject {
                    id: o.id.clone(),
                    name: o.name.clone(),
                    is_container: o.is_container(),
                    contents: vec![],
                })
                .to_vec(),
        };
        let mut filled = loc;
        for o in filled.objects.iter_mut() {
            builder.fill_container(o, 2, &mut stream(0)).unwrap();
        }
        let names: Vec<&str> = filled.objects[0].contents.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["coins", "eyeglasses"]);
        assert!(filled.objects[1].contents.is_empty());
    }

    #[test]
    fn truncated_geometric_matches_distribution() {
        let mut s = stream(11);
        let n = 200_000;
        let cap = 3;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[truncated_geometric(&mut s, 0.5, cap)] += 1;
        }
        // P(k) = 0.5^(k+1) / (1 - 0.5^4)
        for (k, c) in counts.iter().enumerate() {
            let p = 0.5f64.powi(k as i32 + 1) / (1.0 - 0.5f64.powi(4));
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() < 4.0 * sigma, "k={k}");
        }
        assert_eq!(truncated_geometric(&mut s, 0.5, 0), 0);
    }

    #[test]
    fn threshold_stops_growth() {
        let corpus = sample_corpus();
        let world = create_world(
            &corpus,
            ScorerSet::uniform(&RandomScorer),
            &GenerationConfig {
                min_score_threshold: Some(2.0),
                filler_prob: 0.0,
                ..config(1)
            },
        )
        .unwrap();
        assert_eq!(world.location_count(), 1);
    }
}
