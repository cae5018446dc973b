//! Shows two-stage retrieval: a page index narrows the search to the most
//! relevant pages, then a chunk index ranks only chunks from those pages.
//! Widening the page depth makes the result converge to a flat chunk scan.

use std::path::Path;

use ragkit::clean::{run_pipeline, CleanConfig, LexiconLangScorer};
use ragkit::corpus::RawDocument;
use ragkit::dedup::{dedup_corpus, DedupConfig};
use ragkit::embed::{embed_corpus, EmbedConfig, Embedder, HashEmbedder};
use ragkit::index::{hierarchical_query, IndexEntry, PageRef, RetrievalConfig, VectorIndex};
use ragkit::ingest::{ingest_corpus, IngestConfig, PageOverrides, PageRecord, WhitespaceTokenizer};

fn page_ref(id: &str) -> PageRef {
    let mut parts = id.split('/');
    PageRef {
        doc_id: parts.next().unwrap().to_string(),
        page_no: parts.next().unwrap().parse().unwrap(),
    }
}

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
    let manifest = ingest_corpus(
        &pages,
        &WhitespaceTokenizer,
        &IngestConfig { chunk_length: 40, chunk_overlap: 5 },
        &PageOverrides::default(),
    )?;

    let embedder = HashEmbedder::new(64, 42);
    let vectors =
        embed_corpus(&manifest, &WhitespaceTokenizer, &embedder, &EmbedConfig::default())?;
    let page_index = VectorIndex::build_exact(
        vectors
            .pages
            .iter()
            .map(|(id, v)| IndexEntry {
                id: id.clone(),
                vector: v.clone(),
                payload: Some(page_ref(id)),
            })
            .collect(),
    )?;
    let chunk_index = VectorIndex::build_exact(
        vectors
            .chunks
            .iter()
            .map(|(id, v)| IndexEntry {
                id: id.clone(),
                vector: v.clone(),
                payload: Some(page_ref(id)),
            })
            .collect(),
    )?;

    let query = embedder.embed("rising sea levels threaten the coastal road")?;
    for k_pages in [1, 2, page_index.len()] {
        let cfg = RetrievalConfig { k_pages, k_chunks: 4, probes: 1 };
        let results = hierarchical_query(&page_index, &chunk_index, &query, &cfg)?;
        println!("admitting the top {k_pages} page(s):");
        for hit in &results.hits {
            println!("  {:>7.4}  {}", hit.score, hit.id);
        }
        println!();
    }
    println!("with every page admitted, the ranking equals a flat chunk search");
    Ok(())
}
