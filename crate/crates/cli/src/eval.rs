use std::collections::BTreeMap;
use std::path::Path;

use worldsmith_core::corpus::{PoolScope, Task};
use worldsmith_core::evaluation::{evaluate_task, EvalConfig, EvalReport};
use worldsmith_core::{Corpus, FeatureMode};

use crate::scorers;
use crate::{write, EvalArgs};

fn summary_csv(reports: &[(String, EvalReport)]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scorer",
        "feature_mode",
        "task",
        "examples",
        "num_candidates",
        "hits_at_1",
    ])?;
    for (label, r) in reports {
        w.write_record([
            label.clone(),
            r.feature_mode.to_string(),
            r.task.to_string(),
            r.examples.to_string(),
            r.num_candidates.to_string(),
            format!("{:.4}", r.hits_at_1),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// One row per (scorer, feature mode), one column per task.
fn table(reports: &[(String, EvalReport)], tasks: &[Task]) -> String {
    let mut rows: BTreeMap<(usize, FeatureMode), BTreeMap<Task, f64>> = BTreeMap::new();
    let mut labels: Vec<&str> = Vec::new();
    for (label, r) in reports {
        let i = match labels.iter().position(|l| l == label) {
            Some(i) => i,
            None => {
                labels.push(label);
                labels.len() - 1
            }
        };
        rows.entry((i, r.feature_mode)).or_default().insert(r.task, r.hits_at_1);
    }
    let mut out = format!("{:<28} {:<22}", "scorer", "features");
    for t in tasks {
        out.push_str(&format!(" {:>10}", t.as_str()));
    }
    out.push('\n');
    for ((i, mode), hits) in rows {
        out.push_str(&format!("{:<28} {:<22}", labels[i], mode.as_str()));
        for t in tasks {
            match hits.get(t) {
                Some(h) => out.push_str(&format!(" {h:>10.2}")),
                None => out.push_str(&format!(" {:>10}", "-")),
            }
        }
        out.push('\n');
    }
    out
}

pub fn run(corpus: &Corpus, seed: u64, out: &Path, args: &EvalArgs) -> anyhow::Result<()> {
    let tasks = args.task.tasks();
    let config = EvalConfig {
        num_candidates: args.candidates,
        distractor_source: if args.train_pool {
            PoolScope::TaskTrainPool
        } else {
            PoolScope::TaskAllPool
        },
        seed,
    };
    let dir = out.join("eval");
    let mut reports = Vec::new();
    for spec in &args.scorers {
        for &mode in &args.feature.0 {
            let loaded = scorers::load(spec, corpus, mode)?;
            for &task in &tasks {
                loaded.check_task(spec, task)?;
            }
            for &task in &tasks {
                let report = evaluate_task(corpus, loaded.scorer.as_ref(), task, mode, args.split, &config)?;
                let stem = format!("{}_{}_{}", spec.label(), task.as_str(), mode.as_str());
                write(&dir.join(format!("{stem}.json")), report.to_json())?;
                write(&dir.join(format!("{stem}.csv")), report.to_csv()?)?;
                reports.push((spec.label(), report));
            }
        }
    }
    let summary: Vec<serde_json::Value> = reports
        .iter()
        .map(|(label, r)| {
            serde_json::json!({
                "scorer": label,
                "feature_mode": r.feature_mode,
                "task": r.task,
                "examples": r.examples,
                "num_candidates": r.num_candidates,
                "hits_at_1": r.hits_at_1,
            })
        })
        .collect();
    write(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    write(&dir.join("summary.csv"), summary_csv(&reports)?)?;
    print!(
        "Hits@1 (%), K = {}, {} split\n{}",
        args.candidates,
        args.split,
        table(&reports, &tasks)
    );
    Ok(())
}
