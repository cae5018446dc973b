//! Near-duplicate removal with MinHash signatures.
//!
//! Texts are shingled into lowercase word n-grams; each of the `num_permutations`
//! hash functions keeps its minimum shingle hash, and the fraction of matching
//! signature positions estimates the Jaccard similarity of the shingle sets.
//! Deduplication is a greedy in-order sweep (no LSH banding): the corpora this
//! crate targets are small enough that pairwise signature comparison is cheap,
//! and the in-order rule makes survivors deterministic.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::RawDocument;
use crate::error::{Error, Result};
use crate::hashing::{keyed_hash64, SplitMix64};

/// MinHash parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct DedupConfig {
    /// Number of hash permutations in a signature.
    pub num_permutations: usize,
    /// Words per shingle.
    pub shingle_size: usize,
    /// Estimated-Jaccard threshold at or above which a document is a duplicate.
    pub threshold: f64,
    /// Seed for the permutation hash family.
    pub seed: u64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig { num_permutations: 128, shingle_size: 5, threshold: 0.80, seed: 42 }
    }
}

/// A MinHash signature: one minimum hash per permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub values: Vec<u64>,
}

/// A dropped document and the kept document it duplicated.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DuplicatePair {
    pub kept_id: String,
    pub dropped_id: String,
    /// Signature-estimated Jaccard similarity of the two texts.
    pub estimated_jaccard: f64,
    /// `"minhash"` for signature matches, `"source_url"` for metadata matches.
    pub reason: String,
}

/// Lowercase word `size`-grams of `text` (whitespace tokenization). Texts with
/// fewer than `size` words yield the whole text as a single shingle; texts
/// with no words yield the empty set.
pub fn shingles(text: &str, size: usize) -> BTreeSet<String> {
    let words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    let mut out = BTreeSet::new();
    if words.is_empty() {
        return out;
    }
    if words.len() < size.max(1) {
        out.insert(words.join(" "));
        return out;
    }
    for window in words.windows(size.max(1)) {
        out.insert(window.join(" "));
    }
    out
}

/// Exact Jaccard similarity of the shingle sets of two texts.
pub fn exact_jaccard(a: &str, b: &str, size: usize) -> f64 {
    let sa = shingles(a, size);
    let sb = shingles(b, size);
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}

/// Per-permutation hash keys derived from the config seed.
fn permutation_keys(cfg: &DedupConfig) -> Vec<u64> {
    let mut rng = SplitMix64::new(cfg.seed);
    (0..cfg.num_permutations).map(|_| rng.next_u64()).collect()
}

/// MinHash signature of `text`.
///
/// Errors with [`Error::EmptyText`] when the text has no shingles.
pub fn signature(text: &str, cfg: &DedupConfig) -> Result<MinHashSignature> {
    let shingle_set = shingles(text, cfg.shingle_size);
    if shingle_set.is_empty() {
        return Err(Error::EmptyText("cannot sign a text with no shingles"));
    }
    let keys = permutation_keys(cfg);
    let values = keys
        .iter()
        .map(|&key| {
            shingle_set.iter().map(|s| keyed_hash64(key, s.as_bytes())).min().expect("non-empty")
        })
        .collect();
    Ok(MinHashSignature { values })
}

/// Fraction of matching signature positions — an unbiased estimate of the
/// Jaccard similarity of the underlying shingle sets.
pub fn estimated_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> f64 {
    assert_eq!(a.values.len(), b.values.len(), "signatures from different configs");
    let matches = a.values.iter().zip(&b.values).filter(|(x, y)| x == y).count();
    matches as f64 / a.values.len() as f64
}

/// Greedy in-order deduplication: a document is dropped iff its estimated
/// Jaccard against an earlier kept document reaches `cfg.threshold`, or its
/// `source_url` exactly matches an earlier kept document's. Earlier documents
/// always survive. Documents whose text has no shingles are kept verbatim and
/// never treated as duplicates.
pub fn dedup_corpus(
    docs: &[RawDocument],
    cfg: &DedupConfig,
) -> (Vec<RawDocument>, Vec<DuplicatePair>) {
    struct Kept {
        idx: usize,
        signature: Option<MinHashSignature>,
    }
    let mut kept: Vec<Kept> = Vec::new();
    let mut kept_docs: Vec<RawDocument> = Vec::new();
    let mut pairs: Vec<DuplicatePair> = Vec::new();

    for doc in docs {
        let sig = signature(&doc.text, cfg).ok();
        let mut duplicate_of: Option<(usize, f64, &str)> = None;

        if let Some(url) = doc.source_url.as_deref() {
            if let Some(prev) =
                kept.iter().find(|k| kept_docs[k.idx].source_url.as_deref() == Some(url))
            {
                let est = match (&sig, &prev.signature) {
                    (Some(a), Some(b)) => estimated_jaccard(a, b),
                    _ => 1.0,
                };
                duplicate_of = Some((prev.idx, est, "source_url"));
            }
        }
        if duplicate_of.is_none() {
            if let Some(sig) = &sig {
                for prev in &kept {
                    if let Some(prev_sig) = &prev.signature {
                        let est = estimated_jaccard(sig, prev_sig);
                        if est >= cfg.threshold {
                            duplicate_of = Some((prev.idx, est, "minhash"));
                            break;
                        }
                    }
                }
            }
        }

        match duplicate_of {
            Some((prev_idx, est, reason)) => pairs.push(DuplicatePair {
                kept_id: kept_docs[prev_idx].id.clone(),
                dropped_id: doc.id.clone(),
                estimated_jaccard: est,
                reason: reason.to_string(),
            }),
            None => {
                kept.push(Kept { idx: kept_docs.len(), signature: sig });
                kept_docs.push(doc.clone());
            }
        }
    }
    (kept_docs, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// A 23-word text and a copy differing only in the last word: 19 shingles
    /// each, 18 shared, 20 in the union — exact Jaccard 0.9.
    fn point_nine_pair() -> (String, String) {
        let a: Vec<String> = (0..23).map(|i| format!("w{i}")).collect();
        let mut b = a.clone();
        *b.last_mut().unwrap() = "other".to_string();
        (a.join(" "), b.join(" "))
    }

    #[test]
    fn short_text_is_one_shingle() {
        let s = shingles("a", 3);
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec!["a".to_string()]);
    }

    #[test]
    fn shingles_are_lowercase_word_ngrams() {
        let s = shingles("The Cat Sat On The Mat", 5);
        assert!(s.contains("the cat sat on the"));
        assert!(s.contains("cat sat on the mat"));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn empty_text_cannot_be_signed() {
        assert!(matches!(signature("", &DedupConfig::default()), Err(Error::EmptyText(_))));
        assert!(matches!(signature("  \n ", &DedupConfig::default()), Err(Error::EmptyText(_))));
    }

    #[test]
    fn self_similarity_is_exactly_one() {
        let cfg = DedupConfig::default();
        let sig = signature("the quick brown fox jumps over the lazy dog", &cfg).unwrap();
        assert_eq!(estimated_jaccard(&sig, &sig), 1.0);
    }

    #[test]
    fn case_and_spacing_do_not_change_signatures() {
        let cfg = DedupConfig::default();
        let a = signature("The Quick Brown Fox Jumps Over It", &cfg).unwrap();
        let b = signature("the  quick brown fox jumps over it", &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn planted_point_nine_pair_is_dropped_at_default_threshold() {
        let cfg = DedupConfig::default();
        let (a, b) = point_nine_pair();
        assert!((exact_jaccard(&a, &b, cfg.shingle_size) - 0.9).abs() < 1e-12);
        let docs = vec![RawDocument::new("a", a), RawDocument::new("b", b)];
        let (kept, pairs) = dedup_corpus(&docs, &cfg);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "a", "the earlier document survives");
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].dropped_id, "b");
        assert!(pairs[0].estimated_jaccard >= cfg.threshold);
    }

    #[test]
    fn byte_identical_duplicates_are_always_removed() {
        let cfg = DedupConfig::default();
        let text = "sea level rise accelerates along low lying coasts each decade";
        let docs = vec![
            RawDocument::new("first", text),
            RawDocument::new("second", text),
            RawDocument::new("third", "completely different words about mountain glaciers"),
        ];
        let (kept, pairs) = dedup_corpus(&docs, &cfg);
        assert_eq!(kept.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), vec!["first", "third"]);
        assert_eq!(pairs[0].estimated_jaccard, 1.0);
        assert_eq!(pairs[0].reason, "minhash");
    }

    #[test]
    fn matching_source_url_is_a_duplicate() {
        let cfg = DedupConfig::default();
        let mut a = RawDocument::new("a", "glaciers shrink in summer heat waves now");
        let mut b = RawDocument::new("b", "entirely unrelated sentence about ocean currents");
        a.source_url = Some("https://example.org/report".into());
        b.source_url = Some("https://example.org/report".into());
        let (kept, pairs) = dedup_corpus(&[a, b], &cfg);
        assert_eq!(kept.len(), 1);
        assert_eq!(pairs[0].reason, "source_url");
    }

    #[test]
    fn estimate_tracks_exact_jaccard_on_random_pairs() {
        let cfg = DedupConfig::default();
        let mut rng = SplitMix64::new(7);
        for _ in 0..10 {
            let shared: Vec<String> =
                (0..rng.next_below(25) + 10).map(|_| format!("s{}", rng.next_below(40))).collect();
            let mut a_words = shared.clone();
            let mut b_words = shared;
            for _ in 0..rng.next_below(12) {
                a_words.push(format!("a{}", rng.next_below(40)));
            }
            for _ in 0..rng.next_below(12) {
                b_words.push(format!("b{}", rng.next_below(40)));
            }
            let (a, b) = (a_words.join(" "), b_words.join(" "));
            let exact = exact_jaccard(&a, &b, cfg.shingle_size);
            let est = estimated_jaccard(
                &signature(&a, &cfg).unwrap(),
                &signature(&b, &cfg).unwrap(),
            );
            assert!(
                (est - exact).abs() <= 0.15,
                "estimate {est} strayed from exact {exact} for {a:?} vs {b:?}"
            );
        }
    }

    proptest! {
        #[test]
        fn estimate_is_symmetric_and_bounded(
            a in "[a-f ]{1,60}",
            b in "[a-f ]{1,60}",
        ) {
            let cfg = DedupConfig { num_permutations: 32, ..DedupConfig::default() };
            let (sa, sb) = match (signature(&a, &cfg), signature(&b, &cfg)) {
                (Ok(x), Ok(y)) => (x, y),
                _ => return Ok(()), // whitespace-only draw
            };
            let xy = estimated_jaccard(&sa, &sb);
            prop_assert!((0.0..=1.0).contains(&xy));
            prop_assert_eq!(xy, estimated_jaccard(&sb, &sa));
        }

        #[test]
        fn kept_set_is_prefix_closed_under_identity(texts in proptest::collection::vec("[a-d ]{1,30}", 1..8)) {
            // Every kept document keeps its original relative order.
            let cfg = DedupConfig { num_permutations: 16, ..DedupConfig::default() };
            let docs: Vec<RawDocument> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| RawDocument::new(format!("d{i}"), t.clone()))
                .collect();
            let (kept, _) = dedup_corpus(&docs, &cfg);
            let order: Vec<usize> =
                kept.iter().map(|d| d.id[1..].parse::<usize>().unwrap()).collect();
            prop_assert!(order.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
