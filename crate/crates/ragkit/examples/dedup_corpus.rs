//! Detects near-duplicate documents in the fixture corpus with minhash
//! signatures, comparing the estimate against the exact shingle overlap.

use std::path::Path;

use ragkit::clean::{run_pipeline, CleanConfig, LexiconLangScorer};
use ragkit::corpus::RawDocument;
use ragkit::dedup::{dedup_corpus, exact_jaccard, DedupConfig};

fn main() -> ragkit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/raw_docs.jsonl");
    let docs: Vec<RawDocument> = std::fs::read_to_string(path)
        .expect("fixture corpus present")
        .lines()
        .map(|line| serde_json::from_str(line).expect("valid fixture row"))
        .collect();

    // Dedup normally runs on cleaned text, so clean first.
    let (cleaned, _) = run_pipeline(&docs, &CleanConfig::default(), &LexiconLangScorer);

    let cfg = DedupConfig::default();
    println!(
        "comparing {} documents ({} permutations, {}-token shingles, threshold {})\n",
        cleaned.len(),
        cfg.num_permutations,
        cfg.shingle_size,
        cfg.threshold
    );

    let (kept, pairs) = dedup_corpus(&cleaned, &cfg);
    for pair in &pairs {
        let dropped = docs.iter().find(|d| d.id == pair.dropped_id).unwrap();
        let kept_doc = docs.iter().find(|d| d.id == pair.kept_id).unwrap();
        let exact = exact_jaccard(&kept_doc.text, &dropped.text, cfg.shingle_size);
        println!(
            "  {} duplicates {} (matched by {}, estimate {:.4}, exact {:.4})",
            pair.dropped_id, pair.kept_id, pair.reason, pair.estimated_jaccard, exact
        );
    }
    println!("\nkept {} of {} cleaned documents", kept.len(), cleaned.len());
    Ok(())
}
