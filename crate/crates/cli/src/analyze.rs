use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde_json::json;
use worldsmith_core::assembly::{diversity_report, GameWorld};
use worldsmith_core::evaluation::ngram_novelty;
use worldsmith_core::Corpus;

use crate::{write, AnalyzeArgs};

/// Descriptive texts of generated and of crowd-written cards.
fn texts(corpus: &Corpus) -> (Vec<&str>, Vec<&str>) {
    let mut generated = Vec::new();
    let mut written = Vec::new();
    for (is_generated, text) in corpus
        .locations()
        .iter()
        .flat_map(|c| {
            [
                (c.generated, c.description.as_str()),
                (c.generated, c.background.as_str()),
            ]
        })
        .chain(
            corpus
                .characters()
                .iter()
                .flat_map(|c| [(c.generated, c.description.as_str()), (c.generated, c.persona.as_str())]),
        )
        .chain(corpus.objects().iter().map(|c| (c.generated, c.description.as_str())))
    {
        if text.trim().is_empty() {
            continue;
        }
        if is_generated {
            generated.push(text);
        } else {
            written.push(text);
        }
    }
    (generated, written)
}

pub fn run(corpus: &Corpus, out: &Path, args: &AnalyzeArgs) -> anyhow::Result<()> {
    let dir = args.worlds.clone().unwrap_or_else(|| out.join("worlds"));
    if !dir.is_dir() {
        bail!("world directory {} does not exist", dir.display());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no world files in {}", dir.display());
    }
    let worlds = files
        .par_iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            GameWorld::from_export_json(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<anyhow::Result<Vec<GameWorld>>>()?;

    let report = diversity_report(&worlds);
    let target = out.join("analysis");
    write(&target.join("diversity.json"), serde_json::to_string_pretty(&report)?)?;
    write(&target.join("location_frequency.csv"), report.frequency_csv()?)?;
    write(&target.join("coverage.csv"), report.coverage_csv()?)?;
    write(&target.join("histograms.csv"), report.histograms_csv()?)?;

    let (generated, written) = texts(corpus);
    if !generated.is_empty() {
        let novelty = json!({
            "generated_texts": generated.len(),
            "unigram": ngram_novelty(&generated, &written, 1),
            "bigram": ngram_novelty(&generated, &written, 2),
            "trigram": ngram_novelty(&generated, &written, 3),
        });
        write(&target.join("novelty.json"), serde_json::to_string_pretty(&novelty)?)?;
    }

    println!(
        "{} worlds; {} distinct locations; filler fraction {:.4}",
        report.worlds,
        report.coverage.locations.last().copied().unwrap_or(0),
        report.filler_fraction()
    );
    println!("wrote {}", target.display());
    Ok(())
}
