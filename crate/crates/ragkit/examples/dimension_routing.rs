//! Tags every chunk with topical dimensions using the built-in lexicon
//! tagger, then routes the same query through each dimension filter to show
//! how the tag restricts retrieval.

use std::path::Path;

use ragkit::clean::{run_pipeline, CleanConfig, LexiconLangScorer};
use ragkit::corpus::{DimensionTag, RawDocument};
use ragkit::dedup::{dedup_corpus, DedupConfig};
use ragkit::dimensions::{query_dimension, tag_corpus, LexiconTagger, TagConfig};
use ragkit::embed::{embed_corpus, EmbedConfig, Embedder, HashEmbedder};
use ragkit::index::{IndexEntry, PageRef, RetrievalConfig, VectorIndex};
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
    let mut manifest = ingest_corpus(
        &pages,
        &WhitespaceTokenizer,
        &IngestConfig { chunk_length: 40, chunk_overlap: 5 },
        &PageOverrides::default(),
    )?;

    let records = tag_corpus(&mut manifest, &LexiconTagger::default(), &TagConfig::default());
    let tagged = records.iter().filter(|r| r.error.is_none()).count();
    println!("tagged {tagged} of {} chunks:", manifest.chunks.len());
    for chunk in &manifest.chunks {
        let tags: Vec<&str> = chunk.tags.iter().map(|t| t.as_str()).collect();
        println!("  {:<24} [{}]", chunk.chunk_id, tags.join(", "));
    }

    let embedder = HashEmbedder::new(64, 42);
    let vectors =
        embed_corpus(&manifest, &WhitespaceTokenizer, &embedder, &EmbedConfig::default())?;
    let page_index = VectorIndex::build_exact(
        vectors
            .pages
            .iter()
            .map(|(id, v)| IndexEntry { id: id.clone(), vector: v.clone(), payload: Some(page_ref(id)) })
            .collect(),
    )?;
    let chunk_index = VectorIndex::build_exact(
        vectors
            .chunks
            .iter()
            .map(|(id, v)| IndexEntry { id: id.clone(), vector: v.clone(), payload: Some(page_ref(id)) })
            .collect(),
    )?;

    let query = embedder.embed("what does a warming climate cost the community")?;
    let cfg = RetrievalConfig { k_pages: page_index.len(), k_chunks: 3, probes: 1 };
    println!("\nthe same query routed through each dimension:");
    for dim in DimensionTag::ALL {
        let results = query_dimension(&page_index, &chunk_index, &manifest, &query, dim, &cfg)?;
        println!("  {}:", dim.as_str());
        for hit in &results.hits {
            println!("    {:>7.4}  {}", hit.score, hit.id);
        }
    }
    Ok(())
}
