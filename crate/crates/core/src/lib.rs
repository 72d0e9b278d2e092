//! World construction engine for crowd-sourced text-adventure content.
//!
//! The crate is organised around the four placement tasks (neighbouring
//! locations, characters in a location, objects in a location, objects inside
//! a container) and the pieces that use them:
//!
//! * [`corpus`] loads and validates element cards and derives supervised
//!   placement examples.
//! * [`ranking`] holds the candidate scorers: random, data-proportional,
//!   TF-IDF retrieval and the trainable bag-of-words embedding model.
//! * [`evaluation`] computes Hits@1, word-overlap F1 and n-gram novelty.
//! * [`assembly`] grows grid worlds location by location and summarises
//!   batches of generated worlds.
//! * [`generator`] writes text for elements missing from the corpus and
//!   predicts object affordances.

pub mod assembly;
pub mod corpus;
pub mod evaluation;
pub mod generator;
pub mod ranking;
pub mod rng;
pub mod synthetic;
pub mod text;

pub use corpus::{Corpus, FeatureMode, PlacementExample, Task};
pub use ranking::{rank, Candidate, Scorer, ScorerInput};
