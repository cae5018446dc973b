//! Embeds a corpus, builds an exact vector index, saves it to disk, reloads
//! it, and runs a nearest-neighbor search over the reloaded copy.

use std::path::Path;

use ragkit::clean::{run_pipeline, CleanConfig, LexiconLangScorer};
use ragkit::corpus::RawDocument;
use ragkit::dedup::{dedup_corpus, DedupConfig};
use ragkit::embed::{embed_corpus, EmbedConfig, Embedder, HashEmbedder};
use ragkit::index::{IndexEntry, PageRef, VectorIndex};
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
    let pages: Vec<PageRecord> = unique
        .iter()
        .map(|doc| serde_json::from_value(serde_json::to_value(doc).unwrap()).unwrap())
        .collect();
    let ingest_cfg = IngestConfig { chunk_length: 40, chunk_overlap: 5 };
    let manifest =
        ingest_corpus(&pages, &WhitespaceTokenizer, &ingest_cfg, &PageOverrides::default())?;

    let embedder = HashEmbedder::new(64, 42);
    let vectors =
        embed_corpus(&manifest, &WhitespaceTokenizer, &embedder, &EmbedConfig::default())?;
    println!(
        "embedded {} pages and {} chunks at dimension {}",
        vectors.pages.len(),
        vectors.chunks.len(),
        embedder.dim()
    );

    // Chunk ids look like "doc/3/19"; the doc/page prefix becomes the payload
    // that later powers page-gated retrieval.
    let entries: Vec<IndexEntry> = vectors
        .chunks
        .iter()
        .map(|(id, vector)| {
            let mut parts = id.split('/');
            let doc_id = parts.next().unwrap().to_string();
            let page_no: u32 = parts.next().unwrap().parse().unwrap();
            IndexEntry {
                id: id.clone(),
                vector: vector.clone(),
                payload: Some(PageRef { doc_id, page_no }),
            }
        })
        .collect();
    let index = VectorIndex::build_exact(entries)?;

    let dir = std::env::temp_dir().join("ragkit-example-index");
    index.save(&dir)?;
    let reloaded = VectorIndex::load(&dir)?;
    println!("saved and reloaded the index from {}", dir.display());

    let query = embedder.embed("a carbon tax moves investment into clean energy")?;
    let results = reloaded.search(&query, 3, 1)?;
    println!("\ntop chunks for the tax query:");
    for hit in &results.hits {
        println!("  {:>7.4}  {}", hit.score, hit.id);
    }
    Ok(())
}
