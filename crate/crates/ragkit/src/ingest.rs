//! Page filtering and chunking: turns page-level records into the
//! document → page → chunk hierarchy.
//!
//! Pages that look like tables of contents, bibliographies, or table dumps
//! are dropped before chunking. Kept pages are cut into fixed-length token
//! windows that tile the page: window starts advance by `length − overlap`,
//! and the last window always holds the final `length` tokens so no token is
//! lost (it may overlap its predecessor by more than `overlap`).

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Chunk, CorpusManifest, Document, Page};
use crate::error::{Error, Result};

/// Chunking parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct IngestConfig {
    /// Tokens per chunk.
    pub chunk_length: usize,
    /// Tokens shared by consecutive chunks.
    pub chunk_overlap: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { chunk_length: 115, chunk_overlap: 10 }
    }
}

/// Reversible-enough tokenization for chunking.
pub trait Tokenizer {
    /// Splits text into tokens.
    fn encode(&self, text: &str) -> Vec<String>;
    /// Joins tokens back into text. `decode(encode(x))` must equal `x` up to
    /// whitespace normalization.
    fn decode(&self, tokens: &[String]) -> String;
}

/// Whitespace tokenizer: tokens are maximal non-whitespace runs, so
/// punctuation and numeric surface forms (`2.4%`, `[[0]]`) stay attached to
/// their token and survive a decode round trip.
#[derive(Debug, Default, Clone, Copy)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn encode(&self, text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_string).collect()
    }

    fn decode(&self, tokens: &[String]) -> String {
        tokens.join(" ")
    }
}

/// One page-level input record (`pages.jsonl`). Unknown fields are ignored so
/// the same rows can carry cleaning metadata.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PageRecord {
    /// Document the page belongs to.
    pub doc_id: String,
    /// 1-based page number.
    pub page_no: u32,
    /// Page text.
    pub text: String,
    /// Crawl origin; accepts the `source_url` field cleaning stages emit.
    #[serde(default, alias = "source_url", skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license_note: Option<String>,
}

/// Manual keep/drop decisions applied after the page heuristics;
/// entries are `"{doc_id}/{page_no}"` keys.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PageOverrides {
    /// Pages to keep even if a heuristic rejected them.
    pub keep: Vec<String>,
    /// Pages to drop regardless of the heuristics (reason `"manual"`).
    pub drop: Vec<String>,
}

fn toc_line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Dot leaders ("Introduction ...... 37") or a wide gap before a final
    // page number. A single space before trailing digits is *not* enough:
    // prose legitimately ends in years and counts.
    RE.get_or_init(|| Regex::new(r"(\.{3,}\s*\d{1,4}|\s{2,}\d{1,4})\s*$").unwrap())
}

fn reference_line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Numbered citations ("[12] …") or author-initial openings ("Keeling, C.").
    RE.get_or_init(|| Regex::new(r"^\s*(\[\d+\]|[A-Z][A-Za-z'’-]+,\s*[A-Z]\.)").unwrap())
}

/// Digit code points over non-whitespace code points; 0.0 for blank text.
pub fn digit_ratio(text: &str) -> f64 {
    let mut total = 0usize;
    let mut digits = 0usize;
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        if c.is_ascii_digit() {
            digits += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        digits as f64 / total as f64
    }
}

/// Page heuristics: returns the reject reason (`"toc"`, `"references"`,
/// `"table"`) or `None` for pages worth chunking.
///
/// - toc: ≥ 40% of non-empty lines end in a page-number pattern;
/// - references: ≥ 50% of non-empty lines open like bibliography entries;
/// - table: digit ratio ≥ 0.5.
pub fn page_filter(text: &str) -> Option<&'static str> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if !lines.is_empty() {
        let toc_hits = lines.iter().filter(|l| toc_line_re().is_match(l)).count();
        if toc_hits as f64 / lines.len() as f64 >= 0.4 {
            return Some("toc");
        }
        let ref_hits = lines.iter().filter(|l| reference_line_re().is_match(l)).count();
        if ref_hits as f64 / lines.len() as f64 >= 0.5 {
            return Some("references");
        }
    }
    if digit_ratio(text) >= 0.5 {
        return Some("table");
    }
    None
}

/// Token spans `[start, end)` of the chunk windows for a page of `n` tokens.
///
/// Starts advance in steps of `length − overlap`; the final window is the
/// last `length` tokens (the whole page when `n ≤ length`), so consecutive
/// windows overlap by exactly `overlap` except possibly the final one, which
/// overlaps by at least that much.
pub fn window_spans(n: usize, length: usize, overlap: usize) -> Result<Vec<(usize, usize)>> {
    if length == 0 || overlap >= length {
        return Err(Error::InvalidInput(format!(
            "chunk overlap {overlap} must be smaller than chunk length {length}"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n <= length {
        return Ok(vec![(0, n)]);
    }
    let step = length - overlap;
    let mut spans = Vec::new();
    let mut start = 0usize;
    while start + length < n {
        spans.push((start, start + length));
        start += step;
    }
    spans.push((n - length, n));
    Ok(spans)
}

/// Cuts one page into chunks. Errors with [`Error::EmptyPage`] when the page
/// has no tokens.
pub fn chunk_page(
    doc_id: &str,
    page_no: u32,
    page_text: &str,
    tok: &dyn Tokenizer,
    cfg: &IngestConfig,
) -> Result<Vec<Chunk>> {
    let tokens = tok.encode(page_text);
    if tokens.is_empty() {
        return Err(Error::EmptyPage("no tokens to chunk"));
    }
    let spans = window_spans(tokens.len(), cfg.chunk_length, cfg.chunk_overlap)?;
    Ok(spans
        .into_iter()
        .map(|(start, end)| Chunk {
            chunk_id: Chunk::make_id(doc_id, page_no, start),
            doc_id: doc_id.to_string(),
            page_no,
            text: tok.decode(&tokens[start..end]),
            token_span: (start, end),
            tags: Vec::new(),
        })
        .collect())
}

/// Chunk quality gate: keep chunks with ≥ 10 alphabetic words and a digit
/// ratio below 0.5.
pub fn chunk_filter(chunk_text: &str) -> bool {
    let alpha_words = chunk_text
        .split_whitespace()
        .filter(|t| t.chars().any(|c| c.is_alphabetic()))
        .count();
    alpha_words >= 10 && digit_ratio(chunk_text) < 0.5
}

/// Ingests page records into a corpus manifest: groups pages into documents
/// (in first-appearance order), applies the page heuristics and overrides,
/// chunks kept pages, and applies the chunk filter.
///
/// Errors with [`Error::DuplicatePage`] when a `(doc_id, page_no)` repeats
/// and rejects non-positive page numbers.
pub fn ingest_corpus(
    pages: &[PageRecord],
    tok: &dyn Tokenizer,
    cfg: &IngestConfig,
    overrides: &PageOverrides,
) -> Result<CorpusManifest> {
    let mut doc_order: Vec<String> = Vec::new();
    let mut seen: BTreeSet<(String, u32)> = BTreeSet::new();
    for rec in pages {
        if rec.page_no == 0 {
            return Err(Error::InvalidInput(format!(
                "page numbers are 1-based; {}/0 is invalid",
                rec.doc_id
            )));
        }
        if !seen.insert((rec.doc_id.clone(), rec.page_no)) {
            return Err(Error::DuplicatePage { doc_id: rec.doc_id.clone(), page_no: rec.page_no });
        }
        if !doc_order.contains(&rec.doc_id) {
            doc_order.push(rec.doc_id.clone());
        }
    }

    let mut documents = Vec::new();
    let mut chunks = Vec::new();
    for doc_id in &doc_order {
        let mut recs: Vec<&PageRecord> = pages.iter().filter(|r| &r.doc_id == doc_id).collect();
        recs.sort_by_key(|r| r.page_no);

        let mut doc = Document {
            doc_id: doc_id.clone(),
            title: recs.iter().find_map(|r| r.title.clone()),
            source: recs.iter().find_map(|r| r.source.clone()),
            license_note: recs.iter().find_map(|r| r.license_note.clone()),
            pages: Vec::new(),
        };
        for rec in recs {
            let key = format!("{}/{}", rec.doc_id, rec.page_no);
            let mut reason = page_filter(&rec.text).map(str::to_string);
            if overrides.keep.contains(&key) {
                reason = None;
            }
            if overrides.drop.contains(&key) {
                reason = Some("manual".to_string());
            }
            let kept = reason.is_none();
            if kept {
                for chunk in chunk_page(&rec.doc_id, rec.page_no, &rec.text, tok, cfg)? {
                    if chunk_filter(&chunk.text) {
                        chunks.push(chunk);
                    }
                }
            }
            doc.pages.push(Page {
                page_no: rec.page_no,
                text: rec.text.clone(),
                kept,
                reject_reason: reason,
            });
        }
        documents.push(doc);
    }
    Ok(CorpusManifest { documents, chunks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn page_of(n: usize) -> String {
        (0..n).map(|i| format!("t{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn tokenizer_round_trips_up_to_whitespace() {
        let tok = WhitespaceTokenizer;
        for text in ["Hello, world.", "a  b\tc", "2.4% of 410 ppm", "[[0]] cited text"] {
            let decoded = tok.decode(&tok.encode(text));
            let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            assert_eq!(strip(&decoded), strip(text));
        }
    }

    #[test]
    fn window_spans_match_hand_enumeration() {
        let spans = |n| window_spans(n, 115, 10).unwrap();
        assert_eq!(spans(1), vec![(0, 1)]);
        assert_eq!(spans(115), vec![(0, 115)]);
        assert_eq!(spans(116), vec![(0, 115), (1, 116)]);
        assert_eq!(spans(220), vec![(0, 115), (105, 220)]);
        assert_eq!(spans(221), vec![(0, 115), (105, 220), (106, 221)]);
        assert_eq!(spans(325), vec![(0, 115), (105, 220), (210, 325)]);
        assert_eq!(spans(500), vec![(0, 115), (105, 220), (210, 325), (315, 430), (385, 500)]);
    }

    #[test]
    fn short_page_is_one_whole_chunk() {
        let cfg = IngestConfig::default();
        let chunks = chunk_page("d", 1, &page_of(50), &WhitespaceTokenizer, &cfg).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].token_span, (0, 50));
        assert_eq!(chunks[0].chunk_id, "d/1/0");
    }

    #[test]
    fn empty_page_is_an_error() {
        let cfg = IngestConfig::default();
        let err = chunk_page("d", 1, "   ", &WhitespaceTokenizer, &cfg).unwrap_err();
        assert!(matches!(err, Error::EmptyPage(_)));
    }

    #[test]
    fn overlap_must_be_smaller_than_length() {
        assert!(window_spans(10, 5, 5).is_err());
        assert!(window_spans(10, 0, 0).is_err());
    }

    #[test]
    fn toc_pages_are_rejected() {
        let page = (1..=20)
            .map(|i| format!("Section {i} ...... {i}"))
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(page_filter(&page), Some("toc"));
    }

    #[test]
    fn reference_pages_are_rejected() {
        let page = "[1] Ocean heat content, 2019.\n\
                    [2] Glacier mass balance, 2020.\n\
                    Keeling, C. The carbon cycle.\n\
                    [3] Sea level budgets, 2021.";
        assert_eq!(page_filter(page), Some("references"));
    }

    #[test]
    fn numeric_pages_are_rejected_as_tables() {
        let page = "1990 362 14.1 2.5\n2000 371 14.3 2.7\n2010 389 14.5 3.0";
        assert!(digit_ratio(page) >= 0.5);
        assert_eq!(page_filter(page), Some("table"));
    }

    #[test]
    fn prose_pages_pass_the_filter() {
        let page = "Warm water expands as the ocean absorbs heat.\n\
                    Ice sheets add mass to the ocean when they melt.\n\
                    Both processes raise coastal water levels over decades.";
        assert_eq!(page_filter(page), None);
    }

    #[test]
    fn chunk_filter_drops_wordless_and_numeric_chunks() {
        assert!(!chunk_filter("1 2 3 4 5 6 7 8 9 10 11 12"));
        let nine_words = "alpha beta gamma delta epsilon zeta eta theta iota";
        assert!(!chunk_filter(nine_words));
        let numeric_heavy = format!(
            "measured values follow for the ten listed stations now: {}",
            (0..100).map(|i| format!("{}", 1000 + i)).collect::<Vec<_>>().join(" ")
        );
        assert!(!chunk_filter(&numeric_heavy));
        let prose = "the reef survey counted healthy coral colonies along every transect line";
        assert!(chunk_filter(prose));
    }

    #[test]
    fn ingest_groups_pages_and_reports_rejects() {
        let toc = (1..=10).map(|i| format!("Part {i} ...... {i}")).collect::<Vec<_>>().join("\n");
        let prose = "The survey team walked every reef transect at low tide and recorded \
                     living coral cover, water temperature, and turbidity for each segment \
                     of the lagoon during the field season."
            .to_string();
        let pages = vec![
            PageRecord {
                doc_id: "reef".into(),
                page_no: 1,
                text: toc,
                source: Some("crawl".into()),
                title: Some("Reef Report".into()),
                license_note: None,
            },
            PageRecord {
                doc_id: "reef".into(),
                page_no: 2,
                text: prose.clone(),
                source: None,
                title: None,
                license_note: None,
            },
        ];
        let manifest =
            ingest_corpus(&pages, &WhitespaceTokenizer, &IngestConfig::default(), &PageOverrides::default())
                .unwrap();
        assert_eq!(manifest.documents.len(), 1);
        let doc = &manifest.documents[0];
        assert_eq!(doc.title.as_deref(), Some("Reef Report"));
        assert!(!doc.pages[0].kept);
        assert_eq!(doc.pages[0].reject_reason.as_deref(), Some("toc"));
        assert!(doc.pages[1].kept);
        assert_eq!(manifest.chunks.len(), 1);
        assert_eq!(manifest.chunks[0].chunk_id, "reef/2/0");
    }

    #[test]
    fn duplicate_pages_are_an_error() {
        let rec = PageRecord {
            doc_id: "d".into(),
            page_no: 3,
            text: "words".into(),
            source: None,
            title: None,
            license_note: None,
        };
        let err = ingest_corpus(
            &[rec.clone(), rec],
            &WhitespaceTokenizer,
            &IngestConfig::default(),
            &PageOverrides::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicatePage { page_no: 3, .. }));
    }

    #[test]
    fn overrides_flip_heuristic_decisions() {
        let toc = (1..=10).map(|i| format!("Part {i} ...... {i}")).collect::<Vec<_>>().join("\n");
        let pages = vec![PageRecord {
            doc_id: "doc".into(),
            page_no: 1,
            text: toc,
            source: None,
            title: None,
            license_note: None,
        }];
        let keep = PageOverrides { keep: vec!["doc/1".into()], drop: vec![] };
        let manifest =
            ingest_corpus(&pages, &WhitespaceTokenizer, &IngestConfig::default(), &keep).unwrap();
        assert!(manifest.documents[0].pages[0].kept);

        let drop = PageOverrides { keep: vec![], drop: vec!["doc/1".into()] };
        let manifest =
            ingest_corpus(&pages, &WhitespaceTokenizer, &IngestConfig::default(), &drop).unwrap();
        assert_eq!(manifest.documents[0].pages[0].reject_reason.as_deref(), Some("manual"));
    }

    proptest! {
        #[test]
        fn windows_tile_the_page(n in 1usize..2000) {
            let length = 115;
            let overlap = 10;
            let spans = window_spans(n, length, overlap).unwrap();
            // Full coverage.
            prop_assert_eq!(spans[0].0, 0);
            prop_assert_eq!(spans.last().unwrap().1, n);
            for w in spans.windows(2) {
                // Monotone starts, contiguous coverage, bounded overlap.
                prop_assert!(w[0].0 < w[1].0);
                prop_assert!(w[1].0 <= w[0].1);
                let shared = w[0].1 - w[1].0;
                prop_assert!(shared >= overlap);
            }
            // All but possibly the last pair overlap exactly.
            for w in spans.windows(2).rev().skip(1) {
                prop_assert_eq!(w[0].1 - w[1].0, overlap);
            }
            // Every window is exactly `length` tokens unless the page is shorter.
            for (s, e) in &spans {
                if n >= length {
                    prop_assert_eq!(e - s, length);
                } else {
                    prop_assert_eq!(e - s, n);
                }
            }
        }
    }
}
