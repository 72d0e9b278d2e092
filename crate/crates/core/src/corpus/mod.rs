//! Element cards, corpus loading and the per-task supervised examples.

mod examples;
mod splits;
mod validate;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::text::normalize_name;

pub use examples::{
    candidate_pool, derive_examples, element_candidates, render_candidate, PlacementExample, PoolScope,
};
pub use splits::make_splits;
pub use validate::{validate, IssueCode, Severity, ValidationIssue, ValidationReport};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus file {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed corpus JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate card id `{0}`")]
    DuplicateId(String),
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("no splits stored for task `{0}`")]
    MissingSplits(Task),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("unknown feature mode `{0}`")]
    UnknownFeatureMode(String),
}

/// The four placement tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Neighbouring location of a location.
    Location,
    /// Character present in a location.
    Character,
    /// Object present in a location.
    Object,
    /// Object inside a container object.
    Container,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Location, Task::Character, Task::Object, Task::Container];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Location => "location",
            Task::Character => "character",
            Task::Object => "object",
            Task::Container => "container",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| CorpusError::UnknownTask(s.to_string()))
    }
}

/// Which card text a context or candidate exposes to a scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    NameOnly,
    NameAndDescription,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 2] = [FeatureMode::NameOnly, FeatureMode::NameAndDescription];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::NameOnly => "name_only",
            FeatureMode::NameAndDescription => "name_and_description",
        }
    }

    /// Render `name` (plus `description` in the richer mode) as scorer text.
    pub fn render(self, name: &str, description: &str) -> String {
        match self {
            FeatureMode::NameAndDescription if !description.trim().is_empty() => {
                format!("{name} . {description}")
            }
            _ => name.to_string(),
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| CorpusError::UnknownFeatureMode(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Affordance {
    Gettable,
    Wearable,
    #[serde(alias = "weapon")]
    Wieldable,
    Drinkable,
    Edible,
    Container,
    Surface,
}

impl Affordance {
    pub const ALL: [Affordance; 7] = [
        Affordance::Gettable,
        Affordance::Wearable,
        Affordance::Wieldable,
        Affordance::Drinkable,
        Affordance::Edible,
        Affordance::Container,
        Affordance::Surface,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Affordance::Gettable => "gettable",
            Affordance::Wearable => "wearable",
            Affordance::Wieldable => "wieldable",
            Affordance::Drinkable => "drinkable",
            Affordance::Edible => "edible",
            Affordance::Container => "container",
            Affordance::Surface => "surface",
        }
    }

    pub fn index(self) -> usize {
        Affordance::ALL.iter().position(|&a| a == self).unwrap()
    }
}

impl fmt::Display for Affordance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeTag {
    Small,
    Medium,
    Large,
}

fn default_category() -> String {
    "other".to_string()
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationCard {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub background: String,
    #[serde(default)]
    pub neighbors: Vec<String>,
    #[serde(default)]
    pub characters: Vec<String>,
    #[serde(default)]
    pub objects: Vec<String>,
    #[serde(default = "default_category")]
    pub category: String,
    #[serde(default)]
    pub is_filler: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub generated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterCard {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub persona: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub carrying: Vec<String>,
    #[serde(default)]
    pub wearing: Vec<String>,
    #[serde(default)]
    pub wielding: Vec<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub generated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectCard {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub affordances: Vec<Affordance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contained_examples: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_tag: Option<SizeTag>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub generated: bool,
}

impl ObjectCard {
    pub fn has(&self, affordance: Affordance) -> bool {
        self.affordances.contains(&affordance)
    }

    pub fn is_container(&self) -> bool {
        self.has(Affordance::Container)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown split `{s}`"))
    }
}

/// Element ids assigned to each split for one task.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSets {
    #[serde(default)]
    pub train: BTreeSet<String>,
    #[serde(default)]
    pub valid: BTreeSet<String>,
    #[serde(default)]
    pub test: BTreeSet<String>,
}

impl SplitSets {
    pub fn get(&self, split: Split) -> &BTreeSet<String> {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn get_mut(&mut self, split: Split) -> &mut BTreeSet<String> {
        match split {
            Split::Train => &mut self.train,
            Split::Valid => &mut self.valid,
            Split::Test => &mut self.test,
        }
    }

    pub fn split_of(&self, id: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|&s| self.get(s).contains(id))
    }
}

/// On-disk corpus layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusDocument {
    #[serde(default)]
    pub locations: Vec<LocationCard>,
    #[serde(default)]
    pub characters: Vec<CharacterCard>,
    #[serde(default)]
    pub objects: Vec<ObjectCard>,
    #[serde(default)]
    pub filler_locations: Vec<LocationCard>,
    #[serde(default)]
    pub splits: BTreeMap<Task, SplitSets>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CardRef {
    Location(usize),
    Filler(usize),
    Character(usize),
    Object(usize),
}

#[derive(Debug, Clone, Default)]
struct NameIndex {
    by_id: HashMap<String, CardRef>,
    locations: HashMap<String, Vec<CardRef>>,
    characters: HashMap<String, Vec<usize>>,
    objects: HashMap<String, Vec<usize>>,
}

/// An immutable, indexed collection of element cards.
#[derive(Debug, Clone)]
pub struct Corpus {
    doc: CorpusDocument,
    index: NameIndex,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub locations: usize,
    pub filler_locations: usize,
    pub characters: usize,
    pub objects: usize,
}

impl Corpus {
    /// Index a document. Fails only on duplicate ids; every other problem is
    /// left for [`validate`] to report.
    pub fn from_document(mut doc: CorpusDocument) -> Result<Self, CorpusError> {
        for filler in &mut doc.filler_locations {
            filler.is_filler = true;
        }
        let mut index = NameIndex::default();
        let mut add_id = |id: &str, r: CardRef| -> Result<(), CorpusError> {
            if index.by_id.insert(id.to_string(), r).is_some() {
                return Err(CorpusError::DuplicateId(id.to_string()));
            }
            Ok(())
        };
        for (i, c) in doc.locations.iter().enumerate() {
            add_id(&c.id, CardRef::Location(i))?;
        }
        for (i, c) in doc.filler_locations.iter().enumerate() {
            add_id(&c.id, CardRef::Filler(i))?;
        }
        for (i, c) in doc.characters.iter().enumerate() {
            add_id(&c.id, CardRef::Character(i))?;
        }
        for (i, c) in doc.objects.iter().enumerate() {
            add_id(&c.id, CardRef::Object(i))?;
        }
        for (i, c) in doc.locations.iter().enumerate() {
            index
                .locations
                .entry(normalize_name(&c.name))
                .or_default()
                .push(CardRef::Location(i));
        }
        for (i, c) in doc.filler_locations.iter().enumerate() {
            index
                .locations
                .entry(normalize_name(&c.name))
                .or_default()
                .push(CardRef::Filler(i));
        }
        for (i, c) in doc.characters.iter().enumerate() {
            index.characters.entry(normalize_name(&c.name)).or_default().push(i);
        }
        for (i, c) in doc.objects.iter().enumerate() {
            index.objects.entry(normalize_name(&c.name)).or_default().push(i);
        }
        Ok(Corpus { doc, index })
    }

    pub fn from_json(json: &str) -> Result<Self, CorpusError> {
        Self::from_document(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("corpus serialises")
    }

    pub fn document(&self) -> &CorpusDocument {
        &self.doc
    }

    pub fn into_document(self) -> CorpusDocument {
        self.doc
    }

    /// Non-filler locations.
    pub fn locations(&self) -> &[LocationCard] {
        &self.doc.locations
    }

    pub fn filler_locations(&self) -> &[LocationCard] {
        &self.doc.filler_locations
    }

    pub fn characters(&self) -> &[CharacterCard] {
        &self.doc.characters
    }

    pub fn objects(&self) -> &[ObjectCard] {
        &self.doc.objects
    }

    pub fn splits(&self) -> &BTreeMap<Task, SplitSets> {
        &self.doc.splits
    }

    pub fn task_splits(&self, task: Task) -> Option<&SplitSets> {
        self.doc.splits.get(&task)
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            locations: self.doc.locations.len(),
            filler_locations: self.doc.filler_locations.len(),
            characters: self.doc.characters.len(),
            objects: self.doc.objects.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.doc.locations.is_empty()
            && self.doc.filler_locations.is_empty()
            && self.doc.characters.is_empty()
            && self.doc.objects.is_empty()
    }

    /// Location (regular or filler) with the given id.
    pub fn location_by_id(&self, id: &str) -> Option<&LocationCard> {
        match self.index.by_id.get(id)? {
            CardRef::Location(i) => Some(&self.doc.locations[*i]),
            CardRef::Filler(i) => Some(&self.doc.filler_locations[*i]),
            _ => None,
        }
    }

    pub fn character_by_id(&self, id: &str) -> Option<&CharacterCard> {
        match self.index.by_id.get(id)? {
            CardRef::Character(i) => Some(&self.doc.characters[*i]),
            _ => None,
        }
    }

    pub fn object_by_id(&self, id: &str) -> Option<&ObjectCard> {
        match self.index.by_id.get(id)? {
            CardRef::Object(i) => Some(&self.doc.objects[*i]),
            _ => None,
        }
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.index.by_id.contains_key(id)
    }

    /// First location (regular before filler) whose folded name matches.
    pub fn location_by_name(&self, name: &str) -> Option<&LocationCard> {
        let r = self.index.locations.get(&normalize_name(name))?.first()?;
        match r {
            CardRef::Location(i) => Some(&self.doc.locations[*i]),
            CardRef::Filler(i) => Some(&self.doc.filler_locations[*i]),
            _ => None,
        }
    }

    pub fn character_by_name(&self, name: &str) -> Option<&CharacterCard> {
        let i = *self.index.characters.get(&normalize_name(name))?.first()?;
        Some(&self.doc.characters[i])
    }

    pub fn object_by_name(&self, name: &str) -> Option<&ObjectCard> {
        let i = *self.index.objects.get(&normalize_name(name))?.first()?;
        Some(&self.doc.objects[i])
    }

    /// SHA-256 over the canonical serialisation, for world provenance.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.doc).expect("corpus serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Copy of this corpus with the split table replaced.
    pub fn with_splits(&self, splits: BTreeMap<Task, SplitSets>) -> Corpus {
        let mut doc = self.doc.clone();
        doc.splits = splits;
        Corpus::from_document(doc).expect("ids unchanged")
    }

    fn name_groups(&self) -> [(&'static str, Vec<(&String, usize)>); 3] {
        [
            (
                "location",
                self.index.locations.iter().map(|(k, v)| (k, v.len())).collect(),
            ),
            (
                "character",
                self.index.characters.iter().map(|(k, v)| (k, v.len())).collect(),
            ),
            ("object", self.index.objects.iter().map(|(k, v)| (k, v.len())).collect()),
        ]
    }
}

/// Read and index a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Corpus::from_json(&text)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    std::fs::write(path, corpus.to_json() + "\n").map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The bundled sample corpus.
pub fn sample_corpus() -> Corpus {
    Corpus::from_json(SAMPLE_CORPUS_JSON).expect("bundled sample corpus parses")
}

pub const SAMPLE_CORPUS_JSON: &str = include_str!("../../data/sample_corpus.json");
