//! Embedding interfaces and windowed page embeddings.
//!
//! All embedders produce unit-norm `f32` vectors, so cosine similarity is a
//! plain dot product. Two implementations ship: a deterministic hash embedder
//! for tests and offline fixtures (token → seeded pseudo-random unit vector,
//! text → renormalized token mean), and a client for a remote embedding
//! service speaking `{"texts": [...]}` → `{"vectors": [[...]]}`.
//!
//! Pages longer than the embedder's window are embedded as the renormalized
//! mean of sliding-window embeddings.

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusManifest;
use crate::error::{Error, Result};
use crate::hashing::{keyed_hash64, SplitMix64};
use crate::ingest::Tokenizer;

/// A unit-norm embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    /// Wraps raw values, rescaling them to unit L2 norm.
    ///
    /// Errors with [`Error::EmptyText`] for an empty or all-zero vector.
    pub fn normalized(mut values: Vec<f32>) -> Result<EmbeddingVector> {
        let norm = values.iter().map(|v| (*v as f64) * (*v as f64)).sum::<f64>().sqrt();
        if values.is_empty() || norm < 1e-12 {
            return Err(Error::EmptyText("cannot normalize an empty or zero vector"));
        }
        for v in &mut values {
            *v = (*v as f64 / norm) as f32;
        }
        Ok(EmbeddingVector { values })
    }

    /// Wraps values that are already unit norm (±1e-6); used by index loading.
    pub(crate) fn from_unit(values: Vec<f32>) -> EmbeddingVector {
        debug_assert!(
            (values.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt() - 1.0).abs() < 1e-4
        );
        EmbeddingVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    /// L2 norm (≈ 1.0 by construction).
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| (*v as f64) * (*v as f64)).sum::<f64>().sqrt()
    }
}

/// Cosine similarity of two unit vectors (their dot product).
///
/// Errors with [`Error::DimensionMismatch`] when dimensions differ.
pub fn similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f32> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum())
}

/// Windowing parameters for long-input embeddings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EmbedConfig {
    /// Window size in tokens; must not exceed the embedder's `max_seq_len`.
    pub window: usize,
    /// Stride between window starts.
    pub step: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig { window: 512, step: 256 }
    }
}

/// Text embedding interface.
pub trait Embedder {
    /// Output dimensionality.
    fn dim(&self) -> usize;

    /// Longest input, in tokens, the embedder accepts without truncating.
    fn max_seq_len(&self) -> usize {
        512
    }

    /// Embeds one text into a unit-norm vector.
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;

    /// Embeds a batch; the default loops over [`Embedder::embed`].
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Deterministic test embedder: each lowercase whitespace token hashes to a
/// seeded pseudo-random unit vector, and a text embeds as the renormalized
/// mean of its token vectors. Equal `(seed, dim)` always yields equal vectors.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> HashEmbedder {
        HashEmbedder { dim, seed }
    }

    /// Unit vector for a single token.
    pub fn token_vector(&self, token: &str) -> EmbeddingVector {
        let key = keyed_hash64(self.seed, token.to_lowercase().as_bytes());
        let mut rng = SplitMix64::new(key);
        let values: Vec<f32> =
            (0..self.dim).map(|_| (rng.next_f64() * 2.0 - 1.0) as f32).collect();
        EmbeddingVector::normalized(values).expect("non-zero by construction")
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(Error::EmptyText("cannot embed a text with no tokens"));
        }
        let mut acc = vec![0f64; self.dim];
        for token in &tokens {
            for (a, v) in acc.iter_mut().zip(self.token_vector(token).values) {
                *a += v as f64;
            }
        }
        let mean: Vec<f32> = acc.iter().map(|a| (*a / tokens.len() as f64) as f32).collect();
        // Token vectors are pseudo-random; exact cancellation of the mean is
        // not reachable in practice, but fall back deterministically anyway.
        EmbeddingVector::normalized(mean).or_else(|_| Ok(self.token_vector(tokens[0])))
    }
}

/// Client for a remote embedding service.
///
/// Request: `POST {endpoint}` with body `{"texts": ["..."]}` and an optional
/// bearer token; response: `{"vectors": [[...]]}`. Returned vectors are
/// renormalized locally so downstream code can rely on unit norm.
pub struct RemoteEmbedder {
    endpoint: String,
    auth_token: Option<String>,
    dim: usize,
    max_seq_len: usize,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

impl RemoteEmbedder {
    /// Creates a client for an embedding endpoint with an optional bearer token.
    pub fn new(
        endpoint: impl Into<String>,
        auth_token: Option<String>,
        dim: usize,
        max_seq_len: usize,
    ) -> RemoteEmbedder {
        RemoteEmbedder {
            endpoint: endpoint.into(),
            auth_token,
            dim,
            max_seq_len,
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_seq_len(&self) -> usize {
        self.max_seq_len
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let mut batch = self.embed_batch(std::slice::from_ref(&text.to_string()))?;
        batch.pop().ok_or_else(|| Error::Remote("service returned no vectors".into()))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let mut request = self.client.post(&self.endpoint).json(&EmbedRequest { texts });
        if let Some(token) = &self.auth_token {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| Error::Remote(e.to_string()))?;
        if !response.status().is_success() {
            return Err(Error::Remote(format!("embedding service returned {}", response.status())));
        }
        let body: EmbedResponse = response.json().map_err(|e| Error::Remote(e.to_string()))?;
        if body.vectors.len() != texts.len() {
            return Err(Error::Remote(format!(
                "asked for {} embeddings, received {}",
                texts.len(),
                body.vectors.len()
            )));
        }
        body.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(Error::DimensionMismatch { left: self.dim, right: v.len() });
                }
                EmbeddingVector::normalized(v)
            })
            .collect()
    }
}

/// Window start offsets for a sequence of `n` tokens: multiples of `step`
/// while a full window fits strictly inside, plus a final window covering the
/// tail.
pub fn window_offsets(n: usize, window: usize, step: usize) -> Vec<usize> {
    if n <= window {
        return vec![0];
    }
    let mut offsets = Vec::new();
    let mut o = 0usize;
    while o + window < n {
        offsets.push(o);
        o += step.max(1);
    }
    offsets.push(n - window);
    offsets
}

/// Embeds a full page: a single embedder call when the page fits in one
/// window, otherwise the renormalized mean of sliding-window embeddings.
///
/// Errors with [`Error::EmptyPage`] when `tokens` is empty.
pub fn page_embedding(
    tokens: &[String],
    tok: &dyn Tokenizer,
    embedder: &dyn Embedder,
    cfg: &EmbedConfig,
) -> Result<EmbeddingVector> {
    if tokens.is_empty() {
        return Err(Error::EmptyPage("no tokens to embed"));
    }
    let window = cfg.window.min(embedder.max_seq_len()).max(1);
    if tokens.len() <= window {
        return embedder.embed(&tok.decode(tokens));
    }
    let offsets = window_offsets(tokens.len(), window, cfg.step);
    let mut acc = vec![0f64; embedder.dim()];
    for &o in &offsets {
        let piece = embedder.embed(&tok.decode(&tokens[o..o + window]))?;
        if piece.dim() != acc.len() {
            return Err(Error::DimensionMismatch { left: acc.len(), right: piece.dim() });
        }
        for (a, v) in acc.iter_mut().zip(piece.as_slice()) {
            *a += *v as f64;
        }
    }
    let mean: Vec<f32> = acc.iter().map(|a| (*a / offsets.len() as f64) as f32).collect();
    EmbeddingVector::normalized(mean)
}

/// Page and chunk vectors for an ingested corpus, in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusVectors {
    /// `("{doc_id}/{page_no}", vector)` for every kept page.
    pub pages: Vec<(String, EmbeddingVector)>,
    /// `(chunk_id, vector)` for every chunk.
    pub chunks: Vec<(String, EmbeddingVector)>,
}

#[derive(Serialize, Deserialize)]
struct VectorRecord {
    id: String,
    vector: Vec<f32>,
}

impl CorpusVectors {
    /// Writes `pages.jsonl` and `chunks.jsonl` under `dir`.
    pub fn save(&self, dir: &std::path::Path) -> Result<()> {
        let to_records = |items: &[(String, EmbeddingVector)]| {
            items
                .iter()
                .map(|(id, v)| VectorRecord { id: id.clone(), vector: v.as_slice().to_vec() })
                .collect::<Vec<_>>()
        };
        crate::corpus::write_jsonl(&dir.join("pages.jsonl"), &to_records(&self.pages))?;
        crate::corpus::write_jsonl(&dir.join("chunks.jsonl"), &to_records(&self.chunks))
    }

    /// Reads vectors previously written by [`CorpusVectors::save`].
    ///
    /// Stored vectors are trusted to be unit-normalized and are not
    /// renormalized, so a save/load round trip is bit-exact.
    pub fn load(dir: &std::path::Path) -> Result<CorpusVectors> {
        let from_records = |records: Vec<VectorRecord>| {
            records
                .into_iter()
                .map(|r| (r.id, EmbeddingVector::from_unit(r.vector)))
                .collect::<Vec<_>>()
        };
        let pages: Vec<VectorRecord> = crate::corpus::read_jsonl(&dir.join("pages.jsonl"))?;
        let chunks: Vec<VectorRecord> = crate::corpus::read_jsonl(&dir.join("chunks.jsonl"))?;
        Ok(CorpusVectors { pages: from_records(pages), chunks: from_records(chunks) })
    }
}

/// Embeds every kept page (windowed) and every chunk (direct) of a corpus.
pub fn embed_corpus(
    manifest: &CorpusManifest,
    tok: &dyn Tokenizer,
    embedder: &dyn Embedder,
    cfg: &EmbedConfig,
) -> Result<CorpusVectors> {
    let mut pages = Vec::new();
    for doc in &manifest.documents {
        for page in doc.pages.iter().filter(|p| p.kept) {
            let tokens = tok.encode(&page.text);
            let vector = page_embedding(&tokens, tok, embedder, cfg)?;
            pages.push((format!("{}/{}", doc.doc_id, page.page_no), vector));
        }
    }
    let mut chunks = Vec::new();
    for chunk in &manifest.chunks {
        chunks.push((chunk.chunk_id.clone(), embedder.embed(&chunk.text)?));
    }
    Ok(CorpusVectors { pages, chunks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::WhitespaceTokenizer;
    use std::cell::RefCell;

    #[test]
    fn hash_embedder_is_unit_norm_and_deterministic() {
        let embedder = HashEmbedder::new(64, 9);
        let a = embedder.embed("coastal flooding risk").unwrap();
        let b = embedder.embed("coastal flooding risk").unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-6);
        let other = HashEmbedder::new(64, 10).embed("coastal flooding risk").unwrap();
        assert_ne!(a, other, "seed changes the vector family");
    }

    #[test]
    fn repeated_tokens_do_not_move_the_mean() {
        let embedder = HashEmbedder::new(32, 1);
        let once = embedder.embed("tide").unwrap();
        let twice = embedder.embed("tide tide").unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_text_cannot_be_embedded() {
        let embedder = HashEmbedder::new(16, 0);
        assert!(matches!(embedder.embed("   "), Err(Error::EmptyText(_))));
    }

    #[test]
    fn similarity_requires_equal_dims() {
        let a = HashEmbedder::new(16, 0).embed("x").unwrap();
        let b = HashEmbedder::new(8, 0).embed("x").unwrap();
        assert!(matches!(similarity(&a, &b), Err(Error::DimensionMismatch { .. })));
        let aa = similarity(&a, &a).unwrap();
        assert!((aa - 1.0).abs() < 1e-6);
    }

    #[test]
    fn window_offsets_match_pinned_case() {
        assert_eq!(window_offsets(1024, 512, 256), vec![0, 256, 512]);
        assert_eq!(window_offsets(300, 512, 256), vec![0]);
        assert_eq!(window_offsets(513, 512, 256), vec![0, 1]);
    }

    /// Records every text the embedder is asked to embed.
    struct SpyEmbedder {
        inner: HashEmbedder,
        calls: RefCell<Vec<String>>,
    }

    impl Embedder for SpyEmbedder {
        fn dim(&self) -> usize {
            self.inner.dim()
        }
        fn embed(&self, text: &str) -> Result<EmbeddingVector> {
            self.calls.borrow_mut().push(text.to_string());
            self.inner.embed(text)
        }
    }

    #[test]
    fn single_window_page_equals_full_text_embedding() {
        let tok = WhitespaceTokenizer;
        let embedder = HashEmbedder::new(32, 4);
        let tokens: Vec<String> = (0..300).map(|i| format!("t{i}")).collect();
        let via_page =
            page_embedding(&tokens, &tok, &embedder, &EmbedConfig::default()).unwrap();
        let direct = embedder.embed(&tok.decode(&tokens)).unwrap();
        assert_eq!(via_page, direct);
    }

    #[test]
    fn long_page_means_three_windows() {
        let tok = WhitespaceTokenizer;
        let spy = SpyEmbedder { inner: HashEmbedder::new(16, 2), calls: RefCell::new(Vec::new()) };
        let tokens: Vec<String> = (0..1024).map(|i| format!("t{i}")).collect();
        let vector = page_embedding(&tokens, &tok, &spy, &EmbedConfig::default()).unwrap();
        assert!((vector.norm() - 1.0).abs() < 1e-6);
        let calls = spy.calls.borrow();
        assert_eq!(calls.len(), 3);
        assert!(calls[0].starts_with("t0 "));
        assert!(calls[1].starts_with("t256 "));
        assert!(calls[2].starts_with("t512 "));
    }

    #[test]
    fn empty_page_embedding_is_an_error() {
        let err = page_embedding(&[], &WhitespaceTokenizer, &HashEmbedder::new(8, 0), &EmbedConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::EmptyPage(_)));
    }

    #[test]
    fn corpus_vectors_are_stable_under_reordering() {
        use crate::corpus::{Chunk, Document, Page};
        let make = |order: [usize; 2]| {
            let texts = ["tides pull the bay each night", "markets price carbon emissions now"];
            CorpusManifest {
                documents: vec![Document {
                    doc_id: "d".into(),
                    title: None,
                    source: None,
                    license_note: None,
                    pages: vec![Page {
                        page_no: 1,
                        text: texts[0].to_string(),
                        kept: true,
                        reject_reason: None,
                    }],
                }],
                chunks: order
                    .iter()
                    .map(|&i| Chunk {
                        chunk_id: format!("d/1/{i}"),
                        doc_id: "d".into(),
                        page_no: 1,
                        text: texts[i].to_string(),
                        token_span: (0, 5),
                        tags: vec![],
                    })
                    .collect(),
            }
        };
        let embedder = HashEmbedder::new(24, 3);
        let cfg = EmbedConfig::default();
        let tok = WhitespaceTokenizer;
        let forward = embed_corpus(&make([0, 1]), &tok, &embedder, &cfg).unwrap();
        let reversed = embed_corpus(&make([1, 0]), &tok, &embedder, &cfg).unwrap();
        // Same ids map to the same vectors regardless of corpus order.
        for (id, vector) in &forward.chunks {
            let twin = reversed.chunks.iter().find(|(other, _)| other == id).unwrap();
            assert_eq!(&twin.1, vector);
        }
    }
}
