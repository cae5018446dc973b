//! Retrieval-quality harness: recall@k of gold chunks over an evaluated
//! index, queried either by question or by answer text.
//!
//! The core protocol ranks every chunk flat with an exact scan, mirroring a
//! paragraph-level retrieval benchmark; a separate hierarchical variant is
//! an artifact extension for measuring the effect of page gating.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::index::{hierarchical_query, search_where, RetrievalConfig, VectorIndex};

/// Default recall cutoffs.
pub const DEFAULT_KS: [usize; 2] = [1, 5];

/// One evaluation case: a question/answer pair and its gold chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    /// Question used as the query in question mode.
    pub question: String,
    /// Answer used as the query in answer mode.
    pub answer: String,
    /// Chunk id counted as the correct retrieval.
    pub gold_chunk_id: String,
}

/// Which case field is used as the retrieval query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryMode {
    /// Query with the question text.
    Question,
    /// Query with the answer text.
    Answer,
}

impl QueryMode {
    /// Stable lowercase name.
    pub fn as_str(&self) -> &'static str {
        match self {
            QueryMode::Question => "question",
            QueryMode::Answer => "answer",
        }
    }
}

impl fmt::Display for QueryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Recall results for one query mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Query mode the report was computed under.
    pub mode: QueryMode,
    /// Recall value per cutoff k.
    pub recall_at: BTreeMap<usize, f64>,
    /// Number of evaluated cases.
    pub n_cases: usize,
}

/// Reports for both query modes plus their per-k difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    /// Question-mode report.
    pub question: EvalReport,
    /// Answer-mode report.
    pub answer: EvalReport,
    /// `answer - question` recall per cutoff k.
    pub delta: BTreeMap<usize, f64>,
}

fn query_text<'a>(case: &'a EvalCase, mode: QueryMode) -> &'a str {
    match mode {
        QueryMode::Question => &case.question,
        QueryMode::Answer => &case.answer,
    }
}

fn check_golds(cases: &[EvalCase], index: &VectorIndex) -> Result<()> {
    if cases.is_empty() {
        return Err(Error::InvalidInput("at least one evaluation case is required".into()));
    }
    for case in cases {
        if index.entry(&case.gold_chunk_id).is_none() {
            return Err(Error::MissingGold(case.gold_chunk_id.clone()));
        }
    }
    Ok(())
}

fn report_from_ranks(ranks: &[usize], mode: QueryMode, ks: &[usize]) -> EvalReport {
    let mut recall_at = BTreeMap::new();
    for &k in ks {
        let hits = ranks.iter().filter(|&&rank| rank <= k).count();
        recall_at.insert(k, hits as f64 / ranks.len() as f64);
    }
    EvalReport { mode, recall_at, n_cases: ranks.len() }
}

/// 1-based rank of the gold chunk under an exact flat scan of the index.
fn flat_gold_rank(
    index: &VectorIndex,
    embedder: &dyn Embedder,
    query: &str,
    gold: &str,
) -> Result<usize> {
    let vector = embedder.embed(query)?;
    let result = search_where(index, &vector, index.len(), |_| Ok(true))?;
    let position = result
        .hits
        .iter()
        .position(|hit| hit.id == gold)
        .ok_or_else(|| Error::MissingGold(gold.to_string()))?;
    Ok(position + 1)
}

/// Computes recall@k over all cases with a flat exact scan.
///
/// For each case the query (question or answer, per `mode`) is embedded and
/// every chunk in the index is ranked; a case scores at cutoff `k` when its
/// gold chunk appears in the top k. Errors with [`Error::MissingGold`] when
/// a gold id is absent from the index.
pub fn recall_at_k(
    cases: &[EvalCase],
    index: &VectorIndex,
    embedder: &dyn Embedder,
    mode: QueryMode,
    ks: &[usize],
) -> Result<EvalReport> {
    check_golds(cases, index)?;
    let mut ranks = Vec::with_capacity(cases.len());
    for case in cases {
        ranks.push(flat_gold_rank(index, embedder, query_text(case, mode), &case.gold_chunk_id)?);
    }
    Ok(report_from_ranks(&ranks, mode, ks))
}

/// Runs both query modes over the same cases and reports their difference.
pub fn compare_modes(
    cases: &[EvalCase],
    index: &VectorIndex,
    embedder: &dyn Embedder,
    ks: &[usize],
) -> Result<ModeComparison> {
    let question = recall_at_k(cases, index, embedder, QueryMode::Question, ks)?;
    let answer = recall_at_k(cases, index, embedder, QueryMode::Answer, ks)?;
    let delta = question
        .recall_at
        .iter()
        .map(|(&k, &q)| (k, answer.recall_at[&k] - q))
        .collect();
    Ok(ModeComparison { question, answer, delta })
}

/// Recall@k where candidates come from hierarchical page-then-chunk
/// retrieval instead of a flat scan.
///
/// This measures the effect of page gating on top of the flat protocol and
/// is an extension of it: a gold chunk outside the retrieved set counts as
/// unranked. `cfg.k_chunks` is raised to the largest requested cutoff.
pub fn recall_at_k_hierarchical(
    cases: &[EvalCase],
    page_index: &VectorIndex,
    chunk_index: &VectorIndex,
    embedder: &dyn Embedder,
    mode: QueryMode,
    ks: &[usize],
    cfg: &RetrievalConfig,
) -> Result<EvalReport> {
    check_golds(cases, chunk_index)?;
    let max_k = ks.iter().copied().max().unwrap_or(1);
    let cfg = RetrievalConfig { k_chunks: max_k.max(cfg.k_chunks), ..cfg.clone() };
    let mut ranks = Vec::with_capacity(cases.len());
    for case in cases {
        let vector = embedder.embed(query_text(case, mode))?;
        let result = hierarchical_query(page_index, chunk_index, &vector, &cfg)?;
        let rank = result
            .hits
            .iter()
            .position(|hit| hit.id == case.gold_chunk_id)
            .map(|p| p + 1)
            .unwrap_or(usize::MAX);
        ranks.push(rank);
    }
    Ok(report_from_ranks(&ranks, mode, ks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{EmbeddingVector, HashEmbedder};
    use crate::index::{IndexEntry, PageRef, VectorIndex};

    /// Test embedder that maps exact texts to fixed vectors.
    struct MapEmbedder {
        dim: usize,
        map: BTreeMap<String, Vec<f32>>,
    }

    impl Embedder for MapEmbedder {
        fn dim(&self) -> usize {
            self.dim
        }

        fn embed(&self, text: &str) -> Result<EmbeddingVector> {
            let raw = self
                .map
                .get(text)
                .ok_or_else(|| Error::InvalidInput(format!("unmapped text: {text}")))?;
            EmbeddingVector::normalized(raw.clone())
        }
    }

    fn one_hot(dim: usize, hot: usize) -> Vec<f32> {
        let mut v = vec![0.0; dim];
        v[hot] = 1.0;
        v
    }

    /// Index of 10 one-hot chunks plus queries whose gold ranks are exactly
    /// 1, 3, 7, and 2.
    fn rank_fixture() -> (VectorIndex, MapEmbedder, Vec<EvalCase>) {
        let dim = 10;
        let entries: Vec<IndexEntry> = (0..dim)
            .map(|i| IndexEntry {
                id: format!("c{i:02}"),
                vector: EmbeddingVector::normalized(one_hot(dim, i)).unwrap(),
                payload: None,
            })
            .collect();
        let index = VectorIndex::build_exact(entries).unwrap();

        // Score of chunk i is the query's i-th component, so the rank of
        // gold chunk c00 is the rank of component 0 in descending order.
        let mut map = BTreeMap::new();
        map.insert("q-rank-1".to_string(),
            vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]);
        map.insert("q-rank-3".to_string(),
            vec![0.8, 1.0, 0.9, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]);
        map.insert("q-rank-7".to_string(),
            vec![0.4, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.3, 0.2, 0.1]);
        map.insert("q-rank-2".to_string(),
            vec![0.9, 1.0, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]);
        let embedder = MapEmbedder { dim, map };

        let cases: Vec<EvalCase> = ["q-rank-1", "q-rank-3", "q-rank-7", "q-rank-2"]
            .iter()
            .map(|q| EvalCase {
                question: q.to_string(),
                answer: q.to_string(),
                gold_chunk_id: "c00".to_string(),
            })
            .collect();
        (index, embedder, cases)
    }

    #[test]
    fn recall_matches_hand_counts_on_the_rank_fixture() {
        let (index, embedder, cases) = rank_fixture();
        let report =
            recall_at_k(&cases, &index, &embedder, QueryMode::Question, &DEFAULT_KS).unwrap();
        assert_eq!(report.n_cases, 4);
        assert_eq!(report.recall_at[&1], 0.25);
        assert_eq!(report.recall_at[&5], 0.75);
    }

    #[test]
    fn all_golds_at_rank_one_give_perfect_recall() {
        let (index, _, _) = rank_fixture();
        let mut map = BTreeMap::new();
        map.insert("q".to_string(), one_hot(10, 3));
        let embedder = MapEmbedder { dim: 10, map };
        let cases = vec![EvalCase {
            question: "q".into(),
            answer: "q".into(),
            gold_chunk_id: "c03".into(),
        }];
        let report =
            recall_at_k(&cases, &index, &embedder, QueryMode::Question, &DEFAULT_KS).unwrap();
        assert_eq!(report.recall_at[&1], 1.0);
        assert_eq!(report.recall_at[&5], 1.0);
    }

    #[test]
    fn recall_is_monotone_in_k_and_bounded() {
        let (index, embedder, cases) = rank_fixture();
        let ks: Vec<usize> = (1..=10).collect();
        let report = recall_at_k(&cases, &index, &embedder, QueryMode::Question, &ks).unwrap();
        let mut previous = 0.0;
        for k in 1..=10 {
            let value = report.recall_at[&k];
            assert!((0.0..=1.0).contains(&value));
            assert!(value >= previous);
            previous = value;
        }
        assert_eq!(report.recall_at[&10], 1.0);
    }

    #[test]
    fn report_is_invariant_to_case_order() {
        let (index, embedder, mut cases) = rank_fixture();
        let forward =
            recall_at_k(&cases, &index, &embedder, QueryMode::Question, &DEFAULT_KS).unwrap();
        cases.reverse();
        let reversed =
            recall_at_k(&cases, &index, &embedder, QueryMode::Question, &DEFAULT_KS).unwrap();
        assert_eq!(forward.recall_at, reversed.recall_at);
    }

    #[test]
    fn missing_gold_is_reported() {
        let (index, embedder, mut cases) = rank_fixture();
        cases[0].gold_chunk_id = "nope".into();
        let err = recall_at_k(&cases, &index, &embedder, QueryMode::Question, &DEFAULT_KS)
            .unwrap_err();
        assert!(matches!(err, Error::MissingGold(ref id) if id == "nope"));
    }

    #[test]
    fn empty_case_list_is_rejected() {
        let (index, embedder, _) = rank_fixture();
        let err =
            recall_at_k(&[], &index, &embedder, QueryMode::Question, &DEFAULT_KS).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    /// Chunks with distinctive sentences; answers quote their gold chunk
    /// verbatim while questions only gesture at the topic.
    fn quoting_fixture() -> (VectorIndex, HashEmbedder, Vec<EvalCase>) {
        let embedder = HashEmbedder::new(64, 9);
        let chunks = [
            ("p0", "Glaciers in the high mountains retreated twelve meters last decade."),
            ("p1", "Coastal wetlands store carbon in waterlogged peat for centuries."),
            ("p2", "Grid operators balance wind output with hydro reserves overnight."),
            ("p3", "Coral spawning events follow the lunar cycle in warm seas."),
        ];
        let entries: Vec<IndexEntry> = chunks
            .iter()
            .map(|(id, text)| IndexEntry {
                id: id.to_string(),
                vector: embedder.embed(text).unwrap(),
                payload: None,
            })
            .collect();
        let index = VectorIndex::build_exact(entries).unwrap();
        let cases: Vec<EvalCase> = chunks
            .iter()
            .map(|(id, text)| EvalCase {
                question: "what does the report say about this topic".into(),
                answer: text.to_string(),
                gold_chunk_id: id.to_string(),
            })
            .collect();
        (index, embedder, cases)
    }

    #[test]
    fn quoting_answers_retrieve_at_least_as_well_as_questions() {
        let (index, embedder, cases) = quoting_fixture();
        let comparison = compare_modes(&cases, &index, &embedder, &DEFAULT_KS).unwrap();
        assert_eq!(comparison.answer.recall_at[&1], 1.0);
        assert!(
            comparison.answer.recall_at[&1] >= comparison.question.recall_at[&1],
            "answer-mode recall must not trail question-mode on the quoting fixture"
        );
        assert!(comparison.delta[&1] >= 0.0);
    }

    #[test]
    fn identical_questions_and_answers_give_identical_reports() {
        let (index, embedder, cases) = rank_fixture();
        let comparison = compare_modes(&cases, &index, &embedder, &DEFAULT_KS).unwrap();
        assert_eq!(comparison.question.recall_at, comparison.answer.recall_at);
        assert!(comparison.delta.values().all(|&d| d == 0.0));
    }

    #[test]
    fn reports_are_bit_reproducible() {
        let (index, embedder, cases) = quoting_fixture();
        let a = recall_at_k(&cases, &index, &embedder, QueryMode::Answer, &DEFAULT_KS).unwrap();
        let b = recall_at_k(&cases, &index, &embedder, QueryMode::Answer, &DEFAULT_KS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hierarchical_mode_counts_gated_out_golds_as_misses() {
        let embedder = HashEmbedder::new(32, 4);
        let texts = [
            ("a", 1u32, "solar farms in the desert expanded rapidly"),
            ("a", 2u32, "battery storage costs fell again this year"),
            ("b", 1u32, "ancient pollen records reveal vegetation shifts"),
        ];
        let mut page_entries = Vec::new();
        let mut chunk_entries = Vec::new();
        for (doc, page, text) in texts {
            let vector = embedder.embed(text).unwrap();
            let payload = Some(PageRef { doc_id: doc.to_string(), page_no: page });
            page_entries.push(IndexEntry {
                id: format!("{doc}/{page}"),
                vector: vector.clone(),
                payload: payload.clone(),
            });
            chunk_entries.push(IndexEntry { id: format!("{doc}/{page}/0"), vector, payload });
        }
        let page_index = VectorIndex::build_exact(page_entries).unwrap();
        let chunk_index = VectorIndex::build_exact(chunk_entries).unwrap();

        let cases = vec![EvalCase {
            question: "ancient pollen records reveal vegetation shifts".into(),
            answer: "ancient pollen records reveal vegetation shifts".into(),
            gold_chunk_id: "b/1/0".into(),
        }];

        // With every page admitted the gold is found at rank 1.
        let wide = RetrievalConfig { k_pages: 3, k_chunks: 3, probes: 1 };
        let report = recall_at_k_hierarchical(
            &cases, &page_index, &chunk_index, &embedder, QueryMode::Answer, &DEFAULT_KS, &wide,
        )
        .unwrap();
        assert_eq!(report.recall_at[&1], 1.0);

        // A query pointing at doc a with its gold on doc b misses once page
        // gating admits only the top page.
        let narrow = RetrievalConfig { k_pages: 1, k_chunks: 3, probes: 1 };
        let gated = vec![EvalCase {
            question: "battery storage costs fell again this year".into(),
            answer: "battery storage costs fell again this year".into(),
            gold_chunk_id: "b/1/0".into(),
        }];
        let report = recall_at_k_hierarchical(
            &gated, &page_index, &chunk_index, &embedder, QueryMode::Answer, &DEFAULT_KS, &narrow,
        )
        .unwrap();
        assert_eq!(report.recall_at[&5], 0.0);
    }
}
