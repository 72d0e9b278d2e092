use std::path::Path;

use worldsmith_core::generator::{BaselineGenerator, ElementGenerator};
use worldsmith_core::Corpus;

use crate::{write, GenerateArgs};

pub fn run(corpus: &Corpus, seed: u64, out: &Path, args: &GenerateArgs) -> anyhow::Result<()> {
    let generator = BaselineGenerator::new(corpus);
    let element = generator.generate(&args.name, args.kind, seed)?;
    let json = serde_json::to_string_pretty(&element)?;
    let slug: String = args
        .name
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    write(
        &out.join("generated").join(format!("{}_{slug}.json", args.kind)),
        json.clone() + "\n",
    )?;
    println!("{json}");
    Ok(())
}
