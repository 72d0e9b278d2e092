//! Text for elements missing from the corpus, plus affordance prediction.
//!
//! [`BaselineGenerator`] retrieves the three most similar cards of the same
//! kind by name and samples each text field from an order-2 word chain fit
//! on those cards. Any other generator can be plugged in through
//! [`ElementGenerator`].

mod affordance;
mod markov;

use std::fmt;
use std::str::FromStr;

use regex::RegexBuilder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Affordance, CharacterCard, Corpus, LocationCard, ObjectCard};
use crate::ranking::IrScorer;
use crate::rng;

pub use affordance::{
    majority_labels, micro_f1, train_affordance_model, AffordanceModel, AffordancePrediction, AffordanceTrainConfig,
};
pub use markov::MarkovChain;

/// Upper bound on the length of each generated field, in words.
pub const MAX_FIELD_TOKENS: usize = 60;
const PLACEHOLDER: &str = "\u{1}";

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("element name is empty")]
    EmptyName,
    #[error("corpus has no {0} cards")]
    NoCards(ElementKind),
    #[error("no labelled objects to train on")]
    EmptyTrainingSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Location,
    Character,
    Object,
}

impl ElementKind {
    pub const ALL: [ElementKind; 3] = [ElementKind::Location, ElementKind::Character, ElementKind::Object];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Location => "location",
            ElementKind::Character => "character",
            ElementKind::Object => "object",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ElementKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown element kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratedFields {
    Location {
        description: String,
        background: String,
    },
    Character {
        persona: String,
        description: String,
    },
    Object {
        description: String,
        affordances: Vec<Affordance>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationProvenance {
    pub generator: String,
    pub seed: u64,
    /// Ids of the cards the text was drawn from.
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedElement {
    pub name: String,
    #[serde(flatten)]
    pub fields: GeneratedFields,
    pub provenance: GenerationProvenance,
}

/// A generated element as an ordinary corpus card.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "card", rename_all = "snake_case")]
pub enum GeneratedCard {
    Location(LocationCard),
    Character(CharacterCard),
    Object(ObjectCard),
}

impl GeneratedElement {
    pub fn kind(&self) -> ElementKind {
        match self.fields {
            GeneratedFields::Location { .. } => ElementKind::Location,
            GeneratedFields::Character { .. } => ElementKind::Character,
            GeneratedFields::Object { .. } => ElementKind::Object,
        }
    }

    pub fn description(&self) -> &str {
        match &self.fields {
            GeneratedFields::Location { description, .. }
            | GeneratedFields::Character { description, .. }
            | GeneratedFields::Object { description, .. } => description,
        }
    }

    /// Every text field, in declaration order.
    pub fn texts(&self) -> Vec<&str> {
        match &self.fields {
            GeneratedFields::Location {
                description,
                background,
            } => vec![description, background],
            GeneratedFields::Character { persona, description } => vec![persona, description],
            GeneratedFields::Object { description, .. } => vec![description],
        }
    }

    pub fn to_card(&self, id: impl Into<String>) -> GeneratedCard {
        let id = id.into();
        let name = self.name.clone();
        match &self.fields {
            GeneratedFields::Location {
                description,
                background,
            } => GeneratedCard::Location(LocationCard {
                id,
                name,
                description: description.clone(),
                background: background.clone(),
                neighbors: vec![],
                characters: vec![],
                objects: vec![],
                category: "other".into(),
                is_filler: false,
                generated: true,
            }),
            GeneratedFields::Character { persona, description } => GeneratedCard::Character(CharacterCard {
                id,
                name,
                persona: persona.clone(),
                description: description.clone(),
                carrying: vec![],
                wearing: vec![],
                wielding: vec![],
                generated: true,
            }),
            GeneratedFields::Object {
                description,
                affordances,
            } => GeneratedCard::Object(ObjectCard {
                id,
                name,
                description: description.clone(),
                affordances: affordances.clone(),
                contained_examples: vec![],
                size_tag: None,
                generated: true,
            }),
        }
    }
}

pub trait ElementGenerator: Send + Sync {
    fn name(&self) -> String;

    /// Deterministic in (name, kind, seed) for a fixed generator.
    fn generate(&self, name: &str, kind: ElementKind, seed: u64) -> Result<GeneratedElement, GeneratorError>;
}

struct Source {
    id: String,
    name: String,
    fields: Vec<String>,
}

struct KindIndex {
    sources: Vec<Source>,
    names: IrScorer,
}

impl KindIndex {
    fn new(sources: Vec<Source>) -> Self {
        let names = IrScorer::fit(sources.iter().map(|s| s.name.as_str()));
        KindIndex { sources, names }
    }

    /// Indices of the `k` cards most similar to `name` by TF-IDF over names,
    /// restricted to cards with non-empty `field`.
    fn retrieve(&self, name: &str, field: usize, k: usize) -> Vec<usize> {
        let query = self.names.vectorize(name);
        let mut scored: Vec<(usize, f64)> = self
            .sources
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.fields[field].trim().is_empty())
            .map(|(i, s)| (i, query.cosine(&self.names.vectorize(&s.name))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.into_iter().take(k).map(|(i, _)| i).collect()
    }
}

/// Retrieval plus order-2 Markov text, with affordances from a logistic model
/// trained on the corpus objects.
pub struct BaselineGenerator {
    locations: KindIndex,
    characters: KindIndex,
    objects: KindIndex,
    affordances: Option<AffordanceModel>,
}

impl BaselineGenerator {
    pub fn new(corpus: &Corpus) -> Self {
        let affordances = train_affordance_model(corpus.objects(), &AffordanceTrainConfig::default()).ok();
        Self::with_affordance_model(corpus, affordances)
    }

    pub fn with_affordance_model(corpus: &Corpus, affordances: Option<AffordanceModel>) -> Self {
        BaselineGenerator {
            locations: KindIndex::new(
                corpus
                    .locations()
                    .iter()
                    .map(|c| Source {
                        id: c.id.clone(),
                        name: c.name.clone(),
                        fields: vec![c.description.clone(), c.background.clone()],
                    })
                    .collect(),
            ),
            characters: KindIndex::new(
                corpus
                    .characters()
                    .iter()
                    .map(|c| Source {
                        id: c.id.clone(),
                        name: c.name.clone(),
                        fields: vec![c.persona.clone(), c.description.clone()],
                    })
                    .collect(),
            ),
            objects: KindIndex::new(
                corpus
                    .objects()
                    .iter()
                    .map(|c| Source {
                        id: c.id.clone(),
                        name: c.name.clone(),
                        fields: vec![c.description.clone()],
                    })
                    .collect(),
            ),
            affordances,
        }
    }

    pub fn affordance_model(&self) -> Option<&AffordanceModel> {
        self.affordances.as_ref()
    }

    fn index(&self, kind: ElementKind) -> &KindIndex {
        match kind {
            ElementKind::Location => &self.locations,
            ElementKind::Character => &self.characters,
            ElementKind::Object => &self.objects,
        }
    }

    /// Names of the cards retrieved for `field` of an element called `name`.
    pub fn retrieve(&self, name: &str, kind: ElementKind) -> Vec<String> {
        let index = self.index(kind);
        index
            .retrieve(name, 0, 3)
            .into_iter()
            .map(|i| index.sources[i].name.clone())
            .collect()
    }

    fn field(
        &self,
        index: &KindIndex,
        name: &str,
        field: usize,
        tag: &str,
        seed: u64,
        sources: &mut Vec<String>,
    ) -> String {
        let picked = index.retrieve(name, field, 3);
        let texts: Vec<String> = picked
            .iter()
            .map(|&i| {
                let s = &index.sources[i];
                let pattern = regex::escape(&s.name);
                match RegexBuilder::new(&pattern).case_insensitive(true).build() {
                    Ok(re) if !s.name.trim().is_empty() => re.replace_all(&s.fields[field], PLACEHOLDER).into_owned(),
                    _ => s.fields[field].clone(),
                }
            })
            .collect();
        for &i in &picked {
            if !sources.contains(&index.sources[i].id) {
                sources.push(index.sources[i].id.clone());
            }
        }
        let chain = MarkovChain::fit(&texts);
        let mut stream = rng::derived_stream(seed, tag, field as u64);
        let text = chain
            .generate(&mut stream, MAX_FIELD_TOKENS)
            .join(" ")
            .replace(PLACEHOLDER, name);
        splice_name(name, &text)
    }
}

/// Make sure `name` appears in the first sentence and cap the word count.
fn splice_name(name: &str, text: &str) -> String {
    if text.trim().is_empty() {
        return format!("{name}.");
    }
    let first_end = text.find(['.', '!', '?']).map_or(text.len(), |i| i + 1);
    let spliced = if text[..first_end].to_lowercase().contains(&name.to_lowercase()) {
        text.to_string()
    } else {
        format!("{name}: {text}")
    };
    spliced
        .split_whitespace()
        .take(MAX_FIELD_TOKENS)
        .collect::<Vec<_>>()
        .join(" ")
}

impl ElementGenerator for BaselineGenerator {
    fn name(&self) -> String {
        "retrieval-markov".into()
    }

    fn generate(&self, name: &str, kind: ElementKind, seed: u64) -> Result<GeneratedElement, GeneratorError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(GeneratorError::EmptyName);
        }
        let index = self.index(kind);
        if index.sources.is_empty() {
            return Err(GeneratorError::NoCards(kind));
        }
        let mut sources = Vec::new();
        let tag = format!("generate-{kind}");
        let mut f = |field| self.field(index, name, field, &tag, seed, &mut sources);
        let fields = match kind {
            ElementKind::Location => {
                let description = f(0);
                GeneratedFields::Location {
                    description,
                    background: f(1),
                }
            }
            ElementKind::Character => {
                let persona = f(0);
                GeneratedFields::Character {
                    persona,
                    description: f(1),
                }
            }
            ElementKind::Object => {
                let description = f(0);
                let affordances = self
                    .affordances
                    .as_ref()
                    .map(|m| m.predict(name, &description).labels)
                    .unwrap_or_default();
                GeneratedFields::Object {
                    description,
                    affordances,
                }
            }
        };
        Ok(GeneratedElement {
            name: name.to_string(),
            fields,
            provenance: GenerationProvenance {
                generator: ElementGenerator::name(self),
                seed,
                sources,
            },
        })
    }
}

/// One-shot generation with a freshly built [`BaselineGenerator`].
pub fn generate_element(
    name: &str,
    kind: ElementKind,
    corpus: &Corpus,
    seed: u64,
) -> Result<GeneratedElement, GeneratorError> {
    BaselineGenerator::new(corpus).generate(name, kind, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sample_corpus;
    use crate::corpus::validate;
    use crate::evaluation::ngram_novelty;

    #[test]
    fn existing_name_retrieves_itself() {
        let corpus = sample_corpus();
        let generator = BaselineGenerator::new(&corpus);
        for card in corpus.objects().iter().take(20) {
            assert_eq!(generator.retrieve(&card.name, ElementKind::Object)[0], card.name);
        }
        assert_eq!(
            generator.retrieve("Town of Anoria", ElementKind::Location)[0],
            "Town of Anoria"
        );
    }

    #[test]
    fn empty_name_is_rejected() {
        let corpus = sample_corpus();
        assert!(matches!(
            generate_element("  ", ElementKind::Object, &corpus, 0),
            Err(GeneratorError::EmptyName)
        ));
    }

    #[test]
    fn generation_is_deterministic_and_well_formed() {
        let corpus = sample_corpus();
        let generator = BaselineGenerator::new(&corpus);
        for (name, kind) in [
            ("wooden sword", ElementKind::Object),
            ("haunted lighthouse", ElementKind::Location),
            ("grumpy ferryman", ElementKind::Character),
        ] {
            let a = generator.generate(name, kind, 7).unwrap();
            let b = generator.generate(name, kind, 7).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.kind(), kind);
            for text in a.texts() {
                assert!(!text.trim().is_empty());
                assert!(text.split_whitespace().count() <= MAX_FIELD_TOKENS);
                let first = text.split(['.', '!', '?']).next().unwrap().to_lowercase();
                assert!(first.contains(name), "{text}");
            }
            let mut doc = corpus.document().clone();
            match a.to_card(format!("gen_{}", name.replace(' ', "_"))) {
                GeneratedCard::Location(c) => doc.locations.push(c),
                GeneratedCard::Character(c) => doc.characters.push(c),
                GeneratedCard::Object(c) => doc.objects.push(c),
            }
            let report = validate(&Corpus::from_document(doc).unwrap());
            assert!(report.errors().next().is_none(), "{:?}", report);
        }
    }

    #[test]
    fn wooden_sword_novelty_drops_with_n() {
        let corpus = sample_corpus();
        let generator = BaselineGenerator::new(&corpus);
        let generated: Vec<String> = (0..10)
            .map(|seed| {
                generator
                    .generate("wooden sword", ElementKind::Object, seed)
                    .unwrap()
                    .description()
                    .to_string()
            })
            .collect();
        let train: Vec<&str> = corpus.objects().iter().map(|o| o.description.as_str()).collect();
        let n3 = ngram_novelty(&generated, &train, 3);
        let n5 = ngram_novelty(&generated, &train, 5);
        assert!(n5 <= n3, "{n3} {n5}");
    }

    #[test]
    fn splice_caps_and_inserts() {
        assert_eq!(splice_name("rope", ""), "rope.");
        assert_eq!(splice_name("rope", "A coil. Rope again."), "rope: A coil. Rope again.");
        assert_eq!(splice_name("rope", "The rope is long."), "The rope is long.");
        let long = vec!["w"; 100].join(" ");
        assert_eq!(splice_name("rope", &long).split_whitespace().count(), MAX_FIELD_TOKENS);
    }
}
