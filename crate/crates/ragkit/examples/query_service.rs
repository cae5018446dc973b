//! Serves the query engine over HTTP on an ephemeral port, then exercises
//! the health, query, and chunk-lookup endpoints as a client would.

use std::path::Path;

use ragkit::clean::{run_pipeline, CleanConfig, LexiconLangScorer};
use ragkit::corpus::RawDocument;
use ragkit::dedup::{dedup_corpus, DedupConfig};
use ragkit::dimensions::PromptRegistry;
use ragkit::embed::{embed_corpus, EmbedConfig, HashEmbedder};
use ragkit::engine::QueryEngine;
use ragkit::index::{IndexEntry, PageRef, RetrievalConfig, VectorIndex};
use ragkit::ingest::{ingest_corpus, IngestConfig, PageOverrides, PageRecord, WhitespaceTokenizer};
use ragkit::service;

fn page_ref(id: &str) -> PageRef {
    let mut parts = id.split('/');
    PageRef {
        doc_id: parts.next().unwrap().to_string(),
        page_no: parts.next().unwrap().parse().unwrap(),
    }
}

fn build_engine() -> ragkit::Result<QueryEngine> {
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
    QueryEngine::from_parts(
        manifest,
        page_index,
        chunk_index,
        Box::new(embedder),
        PromptRegistry::default(),
        RetrievalConfig::default(),
        "Grounded Non-Expert Demonstrations".to_string(),
    )
}

#[tokio::main]
async fn main() -> ragkit::Result<()> {
    let state = service::empty_state();
    service::install_engine(&state, build_engine()?);

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind any port");
    let addr = listener.local_addr().expect("bound address");
    tokio::spawn(async move {
        axum::serve(listener, service::router(state)).await.expect("service runs");
    });
    println!("service listening on http://{addr}\n");

    let client = reqwest::Client::new();
    let base = format!("http://{addr}");

    let health: serde_json::Value =
        client.get(format!("{base}/v1/healthz")).send().await.unwrap().json().await.unwrap();
    println!("GET /v1/healthz -> {health}");

    let query = serde_json::json!({
        "text": "rising sea levels threaten the coastal road",
        "k_chunks": 2,
        "with_citations": true,
    });
    let response = client
        .post(format!("{base}/v1/query"))
        .json(&query)
        .send()
        .await
        .unwrap();
    println!("\nPOST /v1/query -> {}", response.status());
    let body: serde_json::Value = response.json().await.unwrap();
    let hits = body["hits"].as_array().cloned().unwrap_or_default();
    for hit in &hits {
        println!(
            "  {:>7.4}  {}",
            hit["score"].as_f64().unwrap(),
            hit["chunk_id"].as_str().unwrap()
        );
    }

    if let Some(first) = hits.first() {
        let chunk_id = first["chunk_id"].as_str().unwrap();
        let looked_up: serde_json::Value = client
            .get(format!("{base}/v1/chunks/{chunk_id}"))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        println!("\nGET /v1/chunks/{chunk_id} ->");
        println!("  from: {}", looked_up["document"]["title"].as_str().unwrap_or("(untitled)"));
        println!("  text: {}", looked_up["chunk"]["text"].as_str().unwrap_or_default());
    }
    Ok(())
}
