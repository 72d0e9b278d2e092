use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use worldsmith_core::assembly::{diversity_report, GenerationConfig, ScorerSet, WorldBuilder};
use worldsmith_core::Corpus;

use crate::scorers;
use crate::{write, BuildArgs};

fn config(args: &BuildArgs, seed: u64) -> anyhow::Result<GenerationConfig> {
    let mut c: GenerationConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => GenerationConfig::default(),
    };
    c.seed = seed;
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { c.$field = v; })*
        };
    }
    set!(
        max_locations,
        filler_prob,
        blocked_fraction,
        extra_connect_prob,
        max_characters,
        max_objects,
        max_contained
    );
    if let Some(v) = args.width {
        c.grid_width = v;
    }
    if let Some(v) = args.height {
        c.grid_height = v;
    }
    if let Some(v) = args.feature {
        c.feature_mode = v;
    }
    if args.min_score_threshold.is_some() {
        c.min_score_threshold = args.min_score_threshold;
    }
    c.validate()?;
    Ok(c)
}

pub fn run(corpus: &Corpus, seed: u64, out: &Path, args: &BuildArgs) -> anyhow::Result<()> {
    let config = config(args, seed)?;
    anyhow::ensure!(args.count >= 1, "--count must be at least 1");
    let loaded = scorers::load(&args.scorer, corpus, config.feature_mode)?;
    let builder = WorldBuilder::new(corpus, ScorerSet::uniform(loaded.scorer.as_ref()), config.feature_mode)?;
    let worlds = builder.build_batch(&config, args.count)?;
    if args.count == 1 {
        let path = out.join("world.json");
        write(&path, worlds[0].export_json() + "\n")?;
        println!("wrote {} ({} locations)", path.display(), worlds[0].location_count());
    } else {
        let dir = out.join("worlds");
        std::fs::create_dir_all(&dir)?;
        worlds
            .par_iter()
            .enumerate()
            .try_for_each(|(i, w)| write(&dir.join(format!("world_{i:05}.json")), w.export_json() + "\n"))?;
        let report = diversity_report(&worlds);
        println!(
            "wrote {} worlds to {}; mean locations {:.2}, filler fraction {:.4}",
            worlds.len(),
            dir.display(),
            report.total_placements() as f64 / worlds.len() as f64,
            report.filler_fraction()
        );
    }
    Ok(())
}
