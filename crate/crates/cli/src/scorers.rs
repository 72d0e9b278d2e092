use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use worldsmith_core::corpus::{derive_examples, Task};
use worldsmith_core::ranking::{load_model, EmbeddingModel, IrScorer, ProportionalScorer, RandomScorer};
use worldsmith_core::{Corpus, FeatureMode, Scorer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    Random,
    Proportional,
    Ir,
    Embedding(PathBuf),
}

impl ScorerSpec {
    pub fn parse(s: &str) -> Result<ScorerSpec, String> {
        match s {
            "random" => Ok(ScorerSpec::Random),
            "proportional" => Ok(ScorerSpec::Proportional),
            "ir" => Ok(ScorerSpec::Ir),
            _ => match s.strip_prefix("embedding:") {
                Some(path) if !path.is_empty() => Ok(ScorerSpec::Embedding(path.into())),
                _ => Err(format!(
                    "unknown scorer `{s}` (expected random, proportional, ir or embedding:<path>)"
                )),
            },
        }
    }

    /// Short name used in file names and tables.
    pub fn label(&self) -> String {
        match self {
            ScorerSpec::Random => "random".into(),
            ScorerSpec::Proportional => "proportional".into(),
            ScorerSpec::Ir => "ir".into(),
            ScorerSpec::Embedding(p) => format!(
                "embedding-{}",
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            ),
        }
    }
}

/// A constructed scorer plus the tasks it was trained for, when known.
pub struct Loaded {
    pub scorer: Arc<dyn Scorer>,
    pub tasks: Option<Vec<Task>>,
}

impl Loaded {
    pub fn check_task(&self, spec: &ScorerSpec, task: Task) -> anyhow::Result<()> {
        match &self.tasks {
            Some(tasks) if !tasks.is_empty() && !tasks.contains(&task) => bail!(
                "model/task mismatch: {} was trained on {:?}, not {task}",
                spec.label(),
                tasks.iter().map(|t| t.as_str()).collect::<Vec<_>>()
            ),
            _ => Ok(()),
        }
    }
}

pub fn load(spec: &ScorerSpec, corpus: &Corpus, mode: FeatureMode) -> anyhow::Result<Loaded> {
    let scorer: Arc<dyn Scorer> = match spec {
        ScorerSpec::Random => Arc::new(RandomScorer),
        ScorerSpec::Proportional => {
            let mut examples = Vec::new();
            for task in Task::ALL {
                examples.extend(derive_examples(corpus, task, mode)?);
            }
            Arc::new(ProportionalScorer::fit(&examples))
        }
        ScorerSpec::Ir => Arc::new(IrScorer::fit_corpus(corpus, mode)),
        ScorerSpec::Embedding(path) => {
            if !path.is_file() {
                bail!("model file {} does not exist", path.display());
            }
            let model: EmbeddingModel =
                load_model(path).with_context(|| format!("loading model {}", path.display()))?;
            let tasks = model.meta().tasks.clone();
            return Ok(Loaded {
                scorer: Arc::new(model),
                tasks: Some(tasks),
            });
        }
    };
    Ok(Loaded { scorer, tasks: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!(ScorerSpec::parse("ir"), Ok(ScorerSpec::Ir));
        assert_eq!(
            ScorerSpec::parse("embedding:m/model.bin"),
            Ok(ScorerSpec::Embedding("m/model.bin".into()))
        );
        assert_eq!(
            ScorerSpec::parse("embedding:m/model.bin").unwrap().label(),
            "embedding-model"
        );
        assert!(ScorerSpec::parse("embedding:").is_err());
        assert!(ScorerSpec::parse("bert").is_err());
    }
}
