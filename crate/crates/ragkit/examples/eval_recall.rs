//! Measures retrieval recall over labelled question/answer cases, in both
//! query modes: the question as the query versus the answer as the query.

use std::path::Path;

use ragkit::clean::{run_pipeline, CleanConfig, LexiconLangScorer};
use ragkit::corpus::RawDocument;
use ragkit::dedup::{dedup_corpus, DedupConfig};
use ragkit::embed::{embed_corpus, EmbedConfig, HashEmbedder};
use ragkit::evalkit::{compare_modes, recall_at_k, EvalCase, QueryMode};
use ragkit::index::{IndexEntry, VectorIndex};
use ragkit::ingest::{ingest_corpus, IngestConfig, PageOverrides, PageRecord, WhitespaceTokenizer};

fn main() -> ragkit::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let docs: Vec<RawDocument> = std::fs::read_to_string(fixtures.join("raw_docs.jsonl"))
        .expect("fixture corpus present")
        .lines()
        .map(|line| serde_json::from_str(line).expect("valid fixture row"))
        .collect();
    let cases: Vec<EvalCase> = std::fs::read_to_string(fixtures.join("eval_cases.jsonl"))
        .expect("eval cases present")
        .lines()
        .map(|line| serde_json::from_str(line).expect("valid case row"))
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
    let index = VectorIndex::build_exact(
        vectors
            .chunks
            .iter()
            .map(|(id, v)| IndexEntry { id: id.clone(), vector: v.clone(), payload: None })
            .collect(),
    )?;
    println!("indexed {} chunks; evaluating {} cases\n", index.len(), cases.len());

    let ks = [1, 3, 5];
    let question = recall_at_k(&cases, &index, &embedder, QueryMode::Question, &ks)?;
    let answer = recall_at_k(&cases, &index, &embedder, QueryMode::Answer, &ks)?;
    println!("{:<10} {:>10} {:>10}", "recall", "question", "answer");
    for k in ks {
        println!("{:<10} {:>10.2} {:>10.2}", format!("@{k}"), question.recall_at[&k], answer.recall_at[&k]);
    }

    let comparison = compare_modes(&cases, &index, &embedder, &ks)?;
    println!("\nanswer-mode advantage (answer minus question):");
    for k in ks {
        println!("  @{k}: {:+.2}", comparison.delta[&k]);
    }
    Ok(())
}
