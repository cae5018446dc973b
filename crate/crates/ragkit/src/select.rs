//! In-domain bitext selection: exact-term-match (EM) filtering against a
//! glossary, and embedding-clustering (EC) selection that clusters sentence
//! pair embeddings and keeps clusters where seed in-domain texts land.
//!
//! Sentence embeddings are smooth-inverse-frequency weighted means of word
//! vectors; pair embeddings concatenate the source and target sentence
//! embeddings. Both methods are deterministic given the configured seed.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{Embedder, EmbeddingVector};
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, nearest_centroid, KMeansParams};

/// One parallel sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitextPair {
    /// Stable pair id (input line number for TSV input).
    pub id: usize,
    /// Source-language sentence; non-empty.
    pub src: String,
    /// Target-language sentence; non-empty.
    pub tgt: String,
}

/// One glossary entry: a source term and its translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    /// Source-language term; may span multiple words.
    pub source: String,
    /// Target-language term.
    pub target: String,
}

/// Tuning for embedding-clustering selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ECConfig {
    /// Number of k-means clusters; at least 2.
    pub k_clusters: usize,
    /// Seed for k-means initialization.
    pub seed: u64,
    /// Minimum share of seed texts a cluster must attract to be selected.
    pub tau: f64,
    /// Smooth-inverse-frequency weighting parameter.
    pub a: f64,
    /// Weight all words equally instead of by inverse frequency.
    pub uniform_weights: bool,
}

impl Default for ECConfig {
    fn default() -> Self {
        ECConfig { k_clusters: 8, seed: 42, tau: 0.01, a: 1e-3, uniform_weights: false }
    }
}

/// Lowercase alphanumeric word tokens of a sentence, in order.
fn words(text: &str) -> Vec<String> {
    let mut result = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            result.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        result.push(current);
    }
    result
}

/// Keeps pairs whose source side contains at least one glossary source term
/// as a case-insensitive whole-word phrase.
pub fn em_filter(pairs: &[BitextPair], terms: &[TermEntry]) -> Vec<BitextPair> {
    let term_tokens: Vec<Vec<String>> = terms
        .iter()
        .map(|t| words(&t.source))
        .filter(|tokens| !tokens.is_empty())
        .collect();
    pairs
        .iter()
        .filter(|pair| {
            let src_tokens = words(&pair.src);
            term_tokens.iter().any(|term| {
                !term.is_empty()
                    && src_tokens.len() >= term.len()
                    && src_tokens.windows(term.len()).any(|window| window == term.as_slice())
            })
        })
        .cloned()
        .collect()
}

/// Word-frequency table used for inverse-frequency sentence weighting.
#[derive(Debug, Clone, Default)]
pub struct FrequencyTable {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl FrequencyTable {
    /// Counts word occurrences over a corpus of texts.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut table = FrequencyTable::default();
        for text in texts {
            for word in words(text) {
                *table.counts.entry(word).or_insert(0) += 1;
            }
        }
        table.total = table.counts.values().sum();
        table
    }

    /// Relative frequency of a word; 0 for unseen words.
    pub fn frequency(&self, word: &str) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        *self.counts.get(word).unwrap_or(&0) as f64 / self.total as f64
    }

    /// Total number of word occurrences counted.
    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Embeds a sentence as the inverse-frequency weighted mean of its word
/// vectors, renormalized to unit length.
///
/// Each word occurrence contributes `a / (a + frequency(word))` times its
/// vector (or weight 1 with `uniform_weights`); unseen words have frequency
/// 0 and receive full weight. Errors with [`Error::EmptySentence`] when the
/// text has no word tokens.
pub fn sentence_embedding(
    text: &str,
    provider: &dyn Embedder,
    freqs: &FrequencyTable,
    cfg: &ECConfig,
) -> Result<EmbeddingVector> {
    let tokens = words(text);
    if tokens.is_empty() {
        return Err(Error::EmptySentence);
    }
    let mut acc = vec![0.0f32; provider.dim()];
    for word in &tokens {
        let weight = if cfg.uniform_weights {
            1.0
        } else {
            cfg.a / (cfg.a + freqs.frequency(word))
        };
        let vector = provider.embed(word)?;
        for (slot, component) in acc.iter_mut().zip(vector.as_slice()) {
            *slot += weight as f32 * component;
        }
    }
    EmbeddingVector::normalized(acc)
}

/// Concatenates source and target sentence embeddings into one unit vector.
pub fn pair_embedding(src: &EmbeddingVector, tgt: &EmbeddingVector) -> Result<EmbeddingVector> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch { left: src.dim(), right: tgt.dim() });
    }
    let mut combined = Vec::with_capacity(src.dim() * 2);
    combined.extend_from_slice(src.as_slice());
    combined.extend_from_slice(tgt.as_slice());
    EmbeddingVector::normalized(combined)
}

/// Result of embedding-clustering selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ECSelection {
    /// Cluster ids whose seed share met the threshold, ascending.
    pub selected_clusters: Vec<usize>,
    /// Pairs belonging to selected clusters, in input order.
    pub selected_pairs: Vec<BitextPair>,
    /// Cluster assignment per input pair.
    pub assignments: Vec<usize>,
    /// Share of seed texts assigned to each cluster.
    pub seed_shares: Vec<f64>,
}

/// Selects in-domain pairs by clustering pair embeddings and keeping
/// clusters that attract at least `tau` of the seed texts.
///
/// Pairs are clustered with seeded k-means; each seed text is embedded
/// source-side (duplicated across both halves of the pair space) and
/// assigned to its nearest centroid. Errors with [`Error::TooFewPairs`] when
/// there are fewer pairs than clusters.
pub fn ec_select(
    pairs: &[BitextPair],
    seed_texts: &[String],
    provider: &dyn Embedder,
    cfg: &ECConfig,
) -> Result<ECSelection> {
    if cfg.k_clusters < 2 {
        return Err(Error::InvalidInput("k_clusters must be at least 2".into()));
    }
    if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
        return Err(Error::InvalidInput("tau must lie in (0, 1]".into()));
    }
    if pairs.len() < cfg.k_clusters {
        return Err(Error::TooFewPairs { pairs: pairs.len(), clusters: cfg.k_clusters });
    }

    let freqs =
        FrequencyTable::from_texts(pairs.iter().flat_map(|p| [p.src.as_str(), p.tgt.as_str()]));

    let mut pair_vectors: Vec<Vec<f32>> = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let src = sentence_embedding(&pair.src, provider, &freqs, cfg)?;
        let tgt = sentence_embedding(&pair.tgt, provider, &freqs, cfg)?;
        pair_vectors.push(pair_embedding(&src, &tgt)?.as_slice().to_vec());
    }

    let result = kmeans(&pair_vectors, &KMeansParams::new(cfg.k_clusters, cfg.seed))?;

    let mut seed_counts = vec![0usize; cfg.k_clusters];
    for text in seed_texts {
        let embedded = sentence_embedding(text, provider, &freqs, cfg)?;
        let duplicated = pair_embedding(&embedded, &embedded)?;
        let cluster = nearest_centroid(duplicated.as_slice(), &result.centroids);
        seed_counts[cluster] += 1;
    }
    let total_seed = seed_texts.len().max(1) as f64;
    let seed_shares: Vec<f64> =
        seed_counts.iter().map(|&count| count as f64 / total_seed).collect();

    let selected_clusters: Vec<usize> = seed_shares
        .iter()
        .enumerate()
        .filter(|(_, &share)| share >= cfg.tau)
        .map(|(cluster, _)| cluster)
        .collect();
    let selected_pairs: Vec<BitextPair> = pairs
        .iter()
        .zip(&result.assignments)
        .filter(|(_, &cluster)| selected_clusters.contains(&cluster))
        .map(|(pair, _)| pair.clone())
        .collect();

    Ok(ECSelection {
        selected_clusters,
        selected_pairs,
        assignments: result.assignments,
        seed_shares,
    })
}

/// Line and word counts for a text corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Number of texts (lines).
    pub lines: usize,
    /// Total whitespace-separated words.
    pub words: usize,
}

/// Counts lines and words over a corpus of texts.
pub fn corpus_stats<'a>(texts: impl IntoIterator<Item = &'a str>) -> CorpusStats {
    let mut stats = CorpusStats { lines: 0, words: 0 };
    for text in texts {
        stats.lines += 1;
        stats.words += text.split_whitespace().count();
    }
    stats
}

/// Reads tab-separated `src<TAB>tgt` bitext; blank lines are skipped.
pub fn read_bitext_tsv(path: &Path) -> Result<Vec<BitextPair>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (line_no, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (src, tgt) = line.split_once('\t').ok_or_else(|| {
            Error::InvalidInput(format!(
                "{}:{}: expected src<TAB>tgt",
                path.display(),
                line_no + 1
            ))
        })?;
        if src.trim().is_empty() || tgt.trim().is_empty() {
            return Err(Error::InvalidInput(format!(
                "{}:{}: both sides of a pair must be non-empty",
                path.display(),
                line_no + 1
            )));
        }
        pairs.push(BitextPair {
            id: line_no,
            src: src.trim().to_string(),
            tgt: tgt.trim().to_string(),
        });
    }
    Ok(pairs)
}

/// Reads a tab-separated two-column glossary; blank lines are skipped.
pub fn read_terms_tsv(path: &Path) -> Result<Vec<TermEntry>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut terms = Vec::new();
    for (line_no, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (source, target) = line.split_once('\t').ok_or_else(|| {
            Error::InvalidInput(format!(
                "{}:{}: expected source<TAB>target",
                path.display(),
                line_no + 1
            ))
        })?;
        if source.trim().is_empty() || target.trim().is_empty() {
            return Err(Error::InvalidInput(format!(
                "{}:{}: glossary terms must be non-empty",
                path.display(),
                line_no + 1
            )));
        }
        terms.push(TermEntry {
            source: source.trim().to_string(),
            target: target.trim().to_string(),
        });
    }
    Ok(terms)
}

/// Reads seed texts, one per line; blank lines are skipped.
pub fn read_seed_lines(path: &Path) -> Result<Vec<String>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(raw
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .map(str::to_string)
        .collect())
}
