//! Corpus cleaning: text normalization, PII redaction, and quality filters
//! (length, readability band, symbol ratio, language score).
//!
//! Filters run in a fixed order and the first failure is recorded, so reject
//! reports are deterministic. Normalization and redaction are idempotent:
//! applying either twice equals applying it once.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::RawDocument;
use crate::error::{Error, Result};

/// Thresholds for the cleaning filters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct CleanConfig {
    /// Minimum text length in code points after normalization and redaction.
    pub min_chars: usize,
    /// Lower edge (inclusive) of the accepted Flesch reading-score band.
    pub flesch_min: f64,
    /// Upper edge (inclusive) of the accepted Flesch reading-score band.
    pub flesch_max: f64,
    /// Minimum fraction of alphanumeric-or-whitespace code points.
    pub non_symbol_min_ratio: f64,
    /// Minimum language score (English likelihood in `[0, 1]`).
    pub lang_min_score: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            min_chars: 1,
            flesch_min: 5.0,
            flesch_max: 120.0,
            non_symbol_min_ratio: 0.80,
            lang_min_score: 0.85,
        }
    }
}

/// Pluggable language-identification score in `[0, 1]`.
pub trait LangScorer {
    /// Returns the English-likelihood of `text`; 0.0 when undecidable.
    fn score(&self, text: &str) -> f64;
}

/// Lexicon-frequency language scorer: the fraction of word tokens found in a
/// built-in list of very frequent English words, scaled by the rate expected
/// of ordinary English prose (≈30%) and clamped to `[0, 1]`.
///
/// This is a test- and demo-grade stand-in for a real language identifier;
/// swap in a stronger [`LangScorer`] for production corpora.
#[derive(Debug, Default, Clone, Copy)]
pub struct LexiconLangScorer;

/// Expected stopword rate of ordinary English prose used for scaling.
const ENGLISH_STOPWORD_RATE: f64 = 0.30;

const ENGLISH_STOPWORDS: &[&str] = &[
    "the", "be", "to", "of", "and", "a", "in", "that", "have", "i", "it", "for", "not", "on",
    "with", "he", "as", "you", "do", "at", "this", "but", "his", "by", "from", "they", "we",
    "say", "her", "she", "or", "an", "will", "my", "one", "all", "would", "there", "their",
    "what", "so", "up", "out", "if", "about", "who", "get", "which", "go", "me", "when", "make",
    "can", "like", "time", "no", "just", "him", "know", "take", "people", "into", "year", "your",
    "good", "some", "could", "them", "see", "other", "than", "then", "now", "look", "only",
    "come", "its", "over", "think", "also", "back", "after", "use", "two", "how", "our", "work",
    "first", "well", "way", "even", "new", "want", "because", "any", "these", "give", "day",
    "most", "us", "is", "was", "are", "were", "been", "has", "had", "did", "said", "may",
    "might", "must", "shall", "should", "am", "more", "such", "through", "where", "between",
    "both", "during", "each", "under", "while", "against", "those", "before", "very", "much",
];

impl LangScorer for LexiconLangScorer {
    fn score(&self, text: &str) -> f64 {
        let mut total = 0usize;
        let mut hits = 0usize;
        for token in text.split_whitespace() {
            let word: String =
                token.chars().filter(|c| c.is_alphabetic()).flat_map(|c| c.to_lowercase()).collect();
            if word.is_empty() {
                continue;
            }
            total += 1;
            if ENGLISH_STOPWORDS.contains(&word.as_str()) {
                hits += 1;
            }
        }
        if total == 0 {
            return 0.0;
        }
        ((hits as f64 / total as f64) / ENGLISH_STOPWORD_RATE).min(1.0)
    }
}

/// Per-document cleaning outcome: which filters scored what, and why a
/// document was dropped (if it was).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CleanReport {
    pub id: String,
    pub kept: bool,
    /// Name of the first failing filter; absent iff `kept`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected_by: Option<String>,
    /// Filter name → computed score for every filter that could be computed.
    pub metrics: BTreeMap<String, f64>,
}

/// Normalizes whitespace and boilerplate artifacts. Idempotent.
///
/// - runs of two or more spaces within a line collapse to a single space;
/// - lines whose longest run of a single non-alphanumeric character is ≥ 6
///   (separator art such as `======`) are removed;
/// - runs of two or more blank lines (empty or whitespace-only) collapse to
///   the first blank line of the run.
pub fn normalize_text(text: &str) -> String {
    let mut kept: Vec<String> = Vec::new();
    for line in text.split('\n') {
        let collapsed = collapse_space_runs(line);
        if longest_symbol_run(&collapsed) >= 6 {
            continue;
        }
        kept.push(collapsed);
    }
    let mut out: Vec<String> = Vec::new();
    let mut in_blank_run = false;
    for line in kept {
        let blank = line.trim().is_empty();
        if blank && in_blank_run {
            continue;
        }
        in_blank_run = blank;
        out.push(line);
    }
    out.join("\n")
}

fn collapse_space_runs(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut prev_space = false;
    for c in line.chars() {
        if c == ' ' {
            if !prev_space {
                out.push(c);
            }
            prev_space = true;
        } else {
            prev_space = false;
            out.push(c);
        }
    }
    out
}

/// Longest run of one repeated non-alphanumeric character in `line`.
fn longest_symbol_run(line: &str) -> usize {
    let mut best = 0usize;
    let mut run = 0usize;
    let mut prev: Option<char> = None;
    for c in line.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(c);
        }
        if !c.is_alphanumeric() && run > best {
            best = run;
        }
    }
    best
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?:https?://|www\.)[^\s<>"']+"#).unwrap())
}

fn email_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}").unwrap())
}

fn phone_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Three shapes: international with country code, parenthesized area code,
    // and strictly separator-delimited 3-3-4 groups. Bare space-separated
    // digit groups are deliberately not matched to keep numeric prose intact.
    RE.get_or_init(|| {
        Regex::new(
            r"\+\d{1,3}[ .-]?\(?\d{2,4}\)?[ .-]?\d{3,4}[ .-]?\d{2,4}|\(\d{3}\)[ .-]?\d{3}[ .-]\d{4}|\d{3}[.-]\d{3}[.-]\d{4}",
        )
        .unwrap()
    })
}

/// Replaces emails, phone numbers, and URLs with `<EMAIL>`, `<PHONE>`, and
/// `<URL>`. Idempotent: placeholders contain no redactable characters.
pub fn redact_pii(text: &str) -> String {
    let step = url_re().replace_all(text, "<URL>");
    let step = email_re().replace_all(&step, "<EMAIL>");
    phone_re().replace_all(&step, "<PHONE>").into_owned()
}

/// Word tokens: whitespace-separated tokens containing ≥ 1 alphanumeric
/// code point.
fn word_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace().filter(|t| t.chars().any(|c| c.is_alphanumeric()))
}

/// Syllables in one word: count maximal runs of `[aeiouy]` over the word's
/// alphabetic characters; a trailing silent `e` subtracts one when the count
/// would exceed 1; minimum 1.
pub fn count_syllables(word: &str) -> usize {
    let letters: String =
        word.chars().filter(|c| c.is_alphabetic()).flat_map(|c| c.to_lowercase()).collect();
    let mut runs = 0usize;
    let mut in_run = false;
    for c in letters.chars() {
        let vowel = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if vowel && !in_run {
            runs += 1;
        }
        in_run = vowel;
    }
    if letters.ends_with('e') && runs > 1 {
        runs -= 1;
    }
    runs.max(1)
}

/// Flesch reading score:
/// `206.835 − 1.015 · (words / sentences) − 84.6 · (syllables / words)`.
///
/// Words are whitespace tokens containing at least one alphanumeric code
/// point; sentences are maximal segments terminated by `.`, `!`, `?`, or end
/// of text (only segments containing a word count, minimum 1). Unbounded in
/// both directions by design.
///
/// Errors with [`Error::ZeroWords`] when `text` has no word tokens.
pub fn flesch_score(text: &str) -> Result<f64> {
    let words = word_tokens(text).count();
    if words == 0 {
        return Err(Error::ZeroWords);
    }
    let sentences = text
        .split(['.', '!', '?'])
        .filter(|seg| word_tokens(seg).next().is_some())
        .count()
        .max(1);
    let syllables: usize = word_tokens(text).map(count_syllables).sum();
    Ok(206.835
        - 1.015 * (words as f64 / sentences as f64)
        - 84.6 * (syllables as f64 / words as f64))
}

/// True iff `score` lies inside the configured band, both edges inclusive.
pub fn flesch_in_band(score: f64, cfg: &CleanConfig) -> bool {
    cfg.flesch_min <= score && score <= cfg.flesch_max
}

/// Fraction of code points that are alphanumeric or whitespace.
///
/// Errors with [`Error::EmptyText`] for the empty string.
pub fn non_symbol_ratio(text: &str) -> Result<f64> {
    let mut total = 0usize;
    let mut good = 0usize;
    for c in text.chars() {
        total += 1;
        if c.is_alphanumeric() || c.is_whitespace() {
            good += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyText("non_symbol_ratio of empty string"));
    }
    Ok(good as f64 / total as f64)
}

/// Cleans a corpus: normalizes and redacts every document, then applies the
/// filters in fixed order (length, Flesch band, symbol ratio, language
/// score). Returns the kept documents (with cleaned text) and one report per
/// input document. Input order is preserved in both outputs.
pub fn run_pipeline(
    docs: &[RawDocument],
    cfg: &CleanConfig,
    lang: &dyn LangScorer,
) -> (Vec<RawDocument>, Vec<CleanReport>) {
    let mut kept = Vec::new();
    let mut reports = Vec::new();
    for doc in docs {
        let text = redact_pii(&normalize_text(&doc.text));
        let mut metrics = BTreeMap::new();

        let length = text.chars().count();
        metrics.insert("length".to_string(), length as f64);
        let flesch = flesch_score(&text).ok();
        if let Some(f) = flesch {
            metrics.insert("flesch".to_string(), f);
        }
        let non_symbol = non_symbol_ratio(&text).ok();
        if let Some(r) = non_symbol {
            metrics.insert("non_symbol_ratio".to_string(), r);
        }
        let lang_score = lang.score(&text);
        metrics.insert("lang_score".to_string(), lang_score);

        let rejected_by = if length < cfg.min_chars.max(1) {
            // Empty text after cleaning is always dropped.
            Some("length")
        } else if !flesch.is_some_and(|f| flesch_in_band(f, cfg)) {
            Some("flesch")
        } else if !non_symbol.is_some_and(|r| r >= cfg.non_symbol_min_ratio) {
            Some("non_symbol_ratio")
        } else if lang_score < cfg.lang_min_score {
            Some("lang_score")
        } else {
            None
        };

        reports.push(CleanReport {
            id: doc.id.clone(),
            kept: rejected_by.is_none(),
            rejected_by: rejected_by.map(str::to_string),
            metrics,
        });
        if rejected_by.is_none() {
            let mut cleaned = doc.clone();
            cleaned.text = text;
            kept.push(cleaned);
        }
    }
    (kept, reports)
}
