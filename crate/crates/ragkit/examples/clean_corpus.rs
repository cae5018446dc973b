//! Runs the text-cleaning pipeline over the bundled fixture corpus and
//! prints which documents survive each filter and why the rest fall out.

use std::path::Path;

use ragkit::clean::{run_pipeline, CleanConfig, LexiconLangScorer};
use ragkit::corpus::RawDocument;

fn main() -> ragkit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/raw_docs.jsonl");
    let docs: Vec<RawDocument> = std::fs::read_to_string(&path)
        .expect("fixture corpus present")
        .lines()
        .map(|line| serde_json::from_str(line).expect("valid fixture row"))
        .collect();
    println!("loaded {} raw documents from {}", docs.len(), path.display());

    let cfg = CleanConfig::default();
    let (kept, reports) = run_pipeline(&docs, &cfg, &LexiconLangScorer);

    println!(
        "\nfilters: length >= {} chars, readability in [{}, {}], \
         non-symbol ratio >= {}, language score >= {}\n",
        cfg.min_chars, cfg.flesch_min, cfg.flesch_max, cfg.non_symbol_min_ratio, cfg.lang_min_score
    );
    for report in &reports {
        match &report.rejected_by {
            Some(filter) => println!("  drop {:<24} ({filter})", report.id),
            None => {
                let score = report
                    .metrics
                    .get("flesch")
                    .copied()
                    .unwrap_or(f64::NAN);
                println!("  keep {:<24} readability {score:>8.2}", report.id);
            }
        }
    }
    println!("\nkept {} of {} documents", kept.len(), docs.len());
    Ok(())
}
