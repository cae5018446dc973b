//! Builds a corpus manifest from cleaned pages: page-level heuristics drop
//! tables of contents, reference lists, and numeric tables, then the kept
//! pages are cut into overlapping token windows.

use std::path::Path;

use ragkit::clean::{run_pipeline, CleanConfig, LexiconLangScorer};
use ragkit::corpus::RawDocument;
use ragkit::dedup::{dedup_corpus, DedupConfig};
use ragkit::ingest::{ingest_corpus, IngestConfig, PageOverrides, PageRecord, WhitespaceTokenizer};

fn main() -> ragkit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/raw_docs.jsonl");
    let docs: Vec<RawDocument> = std::fs::read_to_string(path)
        .expect("fixture corpus present")
        .lines()
        .map(|line| serde_json::from_str(line).expect("valid fixture row"))
        .collect();
    let (cleaned, _) = run_pipeline(&docs, &CleanConfig::default(), &LexiconLangScorer);
    let (unique, _) = dedup_corpus(&cleaned, &DedupConfig::default());

    // The fixture rows carry doc_id/page_no pass-through fields, so they
    // convert directly into page records.
    let pages: Vec<PageRecord> = unique
        .iter()
        .map(|doc| serde_json::from_value(serde_json::to_value(doc).unwrap()).unwrap())
        .collect();

    let cfg = IngestConfig { chunk_length: 40, chunk_overlap: 5 };
    let manifest = ingest_corpus(&pages, &WhitespaceTokenizer, &cfg, &PageOverrides::default())?;

    for doc in &manifest.documents {
        println!("document {}", doc.doc_id);
        for page in &doc.pages {
            match &page.reject_reason {
                Some(reason) => println!("  page {} dropped ({reason})", page.page_no),
                None => println!("  page {} kept", page.page_no),
            }
        }
    }
    println!("\nchunks ({}-token windows, {} overlap):", cfg.chunk_length, cfg.chunk_overlap);
    for chunk in &manifest.chunks {
        let preview: String = chunk.text.split_whitespace().take(6).collect::<Vec<_>>().join(" ");
        println!(
            "  {:<24} tokens {:>3}..{:<3} {preview}…",
            chunk.chunk_id, chunk.token_span.0, chunk.token_span.1
        );
    }
    Ok(())
}
