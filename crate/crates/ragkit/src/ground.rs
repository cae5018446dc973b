//! Grounding: attach retrieved evidence to instruction-tuning examples.
//!
//! The reference chunk is the candidate maximizing a weighted combination of
//! answer similarity, prompt similarity, and numeric overlap with the answer.
//! Distractors are pool chunks that look relevant to the prompt but do not
//! support the answer: similarity to the prompt minus penalties for answer
//! similarity and numeric overlap. Context is rendered with `[[i]]` citation
//! markers when requested.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::embed::{similarity, Embedder};
use crate::error::{Error, Result};

/// Weights and sizes for grounding.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct GroundingConfig {
    /// Weight of completion↔chunk similarity in the reference score.
    pub w_answer: f64,
    /// Weight of prompt↔chunk similarity in the reference score.
    pub w_prompt: f64,
    /// Weight of numeric overlap in the reference score.
    pub w_numbers: f64,
    /// Distractors attached per example.
    pub n_distractors: usize,
    /// Distractor penalty on completion↔chunk similarity.
    pub lambda_answer: f64,
    /// Distractor penalty on numeric overlap.
    pub mu_numbers: f64,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig {
            w_answer: 0.4,
            w_prompt: 0.3,
            w_numbers: 0.3,
            n_distractors: 4,
            lambda_answer: 1.0,
            mu_numbers: 1.0,
        }
    }
}

impl GroundingConfig {
    /// Checks the normalized-weights convention (non-negative, summing to 1).
    /// Scaling all three weights by a common positive factor never changes
    /// which chunk wins, so this is a data hygiene check, not a math one.
    pub fn validate(&self) -> Result<()> {
        if self.w_answer < 0.0 || self.w_prompt < 0.0 || self.w_numbers < 0.0 {
            return Err(Error::InvalidInput("grounding weights must be non-negative".into()));
        }
        let sum = self.w_answer + self.w_prompt + self.w_numbers;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "grounding weights should sum to 1 (got {sum})"
            )));
        }
        Ok(())
    }
}

/// A normalized numeric value: thousands separators stripped, trailing `%`
/// recorded as a flag, decimal value canonicalized (`0.50` ≡ `.5` ≡ `0.5`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NumberToken {
    pub canonical: String,
    pub percent: bool,
}

/// The numbers found in a text, keyed by normalized value with the surface
/// forms that produced them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NumberSet {
    pub entries: BTreeMap<NumberToken, Vec<String>>,
}

impl NumberSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, token: &NumberToken) -> bool {
        self.entries.contains_key(token)
    }

    /// Number of normalized values present in both sets.
    pub fn intersection_len(&self, other: &NumberSet) -> usize {
        self.entries.keys().filter(|t| other.contains(t)).count()
    }
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Sign, thousands-separated or plain integer part, optional decimals,
    // optional percent — or a bare decimal fraction like `.5`.
    RE.get_or_init(|| {
        Regex::new(r"[+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?%?|[+-]?\.\d+%?").unwrap()
    })
}

fn canonicalize(surface: &str) -> NumberToken {
    let percent = surface.ends_with('%');
    let body = surface.trim_end_matches('%');
    let (negative, body) = match body.as_bytes().first() {
        Some(b'-') => (true, &body[1..]),
        Some(b'+') => (false, &body[1..]),
        _ => (false, body),
    };
    let body: String = body.chars().filter(|c| *c != ',').collect();
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body.as_str(), ""),
    };
    let int_trimmed = int_part.trim_start_matches('0');
    let int_canon = if int_trimmed.is_empty() { "0" } else { int_trimmed };
    let frac_canon = frac_part.trim_end_matches('0');
    let zero = int_canon == "0" && frac_canon.is_empty();
    let mut canonical = String::new();
    if negative && !zero {
        canonical.push('-');
    }
    canonical.push_str(int_canon);
    if !frac_canon.is_empty() {
        canonical.push('.');
        canonical.push_str(frac_canon);
    }
    NumberToken { canonical, percent }
}

/// Extracts standalone numbers from text: integers, decimals, and percent
/// forms, with optional sign and thousands separators. Digits glued to
/// letters (`CO2`, `v1.5`) are not numbers.
pub fn extract_numbers(text: &str) -> NumberSet {
    let mut set = NumberSet::default();
    for m in number_re().find_iter(text) {
        let before = text[..m.start()].chars().next_back();
        let after = text[m.end()..].chars().next();
        if before.is_some_and(|c| c.is_alphanumeric()) || after.is_some_and(|c| c.is_alphanumeric())
        {
            continue;
        }
        let token = canonicalize(m.as_str());
        set.entries.entry(token).or_default().push(m.as_str().to_string());
    }
    set
}

/// Fraction of the completion's numbers that also appear in the chunk;
/// 0.0 when the completion contains no numbers.
pub fn number_overlap(completion: &str, chunk: &str) -> f64 {
    let completion_numbers = extract_numbers(completion);
    if completion_numbers.is_empty() {
        return 0.0;
    }
    let chunk_numbers = extract_numbers(chunk);
    completion_numbers.intersection_len(&chunk_numbers) as f64 / completion_numbers.len() as f64
}

/// Per-candidate grounding scores.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CandidateScore {
    pub chunk_id: String,
    pub sim_prompt: f64,
    pub sim_answer: f64,
    pub number_overlap: f64,
    pub combined: f64,
}

/// Scores every candidate and returns the winning chunk id (ties → lowest
/// chunk id) together with all scores, in candidate order.
///
/// Errors with [`Error::NoCandidates`] for an empty candidate list.
pub fn select_reference(
    prompt: &str,
    completion: &str,
    candidates: &[Chunk],
    embedder: &dyn Embedder,
    cfg: &GroundingConfig,
) -> Result<(String, Vec<CandidateScore>)> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let prompt_vec = embedder.embed(prompt)?;
    let answer_vec = embedder.embed(completion)?;
    let mut scores = Vec::with_capacity(candidates.len());
    for chunk in candidates {
        let chunk_vec = embedder.embed(&chunk.text)?;
        let sim_prompt = similarity(&prompt_vec, &chunk_vec)? as f64;
        let sim_answer = similarity(&answer_vec, &chunk_vec)? as f64;
        let overlap = number_overlap(completion, &chunk.text);
        scores.push(CandidateScore {
            chunk_id: chunk.chunk_id.clone(),
            sim_prompt,
            sim_answer,
            number_overlap: overlap,
            combined: cfg.w_answer * sim_answer + cfg.w_prompt * sim_prompt + cfg.w_numbers * overlap,
        });
    }
    let best = scores
        .iter()
        .max_by(|a, b| {
            a.combined
                .partial_cmp(&b.combined)
                .unwrap_or(std::cmp::Ordering::Equal)
                // On equal scores prefer the *lower* chunk id.
                .then_with(|| b.chunk_id.cmp(&a.chunk_id))
        })
        .expect("non-empty");
    Ok((best.chunk_id.clone(), scores))
}

/// A distractor with its score.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Distractor {
    pub chunk_id: String,
    pub text: String,
    pub score: f64,
}

/// Picks up to `n_distractors` pool chunks maximizing
/// `sim(prompt) − λ·sim(completion) − μ·number_overlap`.
///
/// The pool must already exclude the cited document's chunks; the selected
/// reference is dropped here defensively as well.
pub fn select_distractors(
    prompt: &str,
    completion: &str,
    pool: &[Chunk],
    reference_id: Option<&str>,
    embedder: &dyn Embedder,
    cfg: &GroundingConfig,
) -> Result<Vec<Distractor>> {
    let prompt_vec = embedder.embed(prompt)?;
    let answer_vec = embedder.embed(completion)?;
    let mut scored: Vec<Distractor> = Vec::new();
    for chunk in pool {
        if Some(chunk.chunk_id.as_str()) == reference_id {
            continue;
        }
        let chunk_vec = embedder.embed(&chunk.text)?;
        let sim_prompt = similarity(&prompt_vec, &chunk_vec)? as f64;
        let sim_answer = similarity(&answer_vec, &chunk_vec)? as f64;
        let overlap = number_overlap(completion, &chunk.text);
        scored.push(Distractor {
            chunk_id: chunk.chunk_id.clone(),
            text: chunk.text.clone(),
            score: sim_prompt - cfg.lambda_answer * sim_answer - cfg.mu_numbers * overlap,
        });
    }
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.chunk_id.cmp(&b.chunk_id))
    });
    scored.truncate(cfg.n_distractors);
    Ok(scored)
}

/// Joins chunk texts into a context block, one chunk per line, optionally
/// prefixed with `[[i]]` citation markers.
pub fn format_context<S: AsRef<str>>(chunk_texts: &[S], with_citations: bool) -> String {
    chunk_texts
        .iter()
        .enumerate()
        .map(|(i, text)| {
            if with_citations {
                format!("[[{i}]] {}", text.as_ref())
            } else {
                text.as_ref().to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// One instruction-tuning example on the way into grounding.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IftExample {
    pub prompt: String,
    pub completion: String,
    /// Crawl origin of the document the example cites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    /// Task family; categories starting with `Closed` get distractors only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_category: Option<String>,
}

impl IftExample {
    /// Closed-ended tasks get distractor context but no reference chunk.
    pub fn is_closed_ended(&self) -> bool {
        self.task_category.as_deref().is_some_and(|c| c.starts_with("Closed"))
    }
}

/// A grounded example ready for prompt assembly.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GroundedExample {
    pub prompt: String,
    pub completion: String,
    /// Selected reference chunk id; absent for closed-ended tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_chunk_id: Option<String>,
    pub distractor_chunk_ids: Vec<String>,
    /// Rendered context block (reference first, then distractors by rank).
    pub context: String,
    /// Scores for every candidate considered (empty for closed-ended tasks).
    pub candidate_scores: Vec<CandidateScore>,
}

/// Grounds one example end to end: picks the reference among `candidates`
/// (unless the task is closed-ended), picks distractors from `pool`, and
/// renders the context block.
pub fn ground_example(
    example: &IftExample,
    candidates: &[Chunk],
    pool: &[Chunk],
    embedder: &dyn Embedder,
    cfg: &GroundingConfig,
    with_citations: bool,
) -> Result<GroundedExample> {
    let (reference, candidate_scores) = if example.is_closed_ended() {
        (None, Vec::new())
    } else {
        let (id, scores) =
            select_reference(&example.prompt, &example.completion, candidates, embedder, cfg)?;
        (Some(id), scores)
    };
    let distractors = select_distractors(
        &example.prompt,
        &example.completion,
        pool,
        reference.as_deref(),
        embedder,
        cfg,
    )?;
    let mut texts: Vec<String> = Vec::new();
    if let Some(id) = &reference {
        let chunk = candidates.iter().find(|c| &c.chunk_id == id).expect("selected from candidates");
        texts.push(chunk.text.clone());
    }
    texts.extend(distractors.iter().map(|d| d.text.clone()));
    Ok(GroundedExample {
        prompt: example.prompt.clone(),
        completion: example.completion.clone(),
        reference_chunk_id: reference,
        distractor_chunk_ids: distractors.iter().map(|d| d.chunk_id.clone()).collect(),
        context: format_context(&texts, with_citations),
        candidate_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::HashEmbedder;

    fn chunk(id: &str, text: &str) -> Chunk {
        Chunk {
            chunk_id: id.to_string(),
            doc_id: id.split('/').next().unwrap_or("d").to_string(),
            page_no: 1,
            text: text.to_string(),
            token_span: (0, 1),
            tags: vec![],
        }
    }

    #[test]
    fn numbers_are_extracted_and_normalized() {
        let set = extract_numbers("CO2 rose 2.4% from 410 ppm");
        assert_eq!(set.len(), 2);
        assert!(set.contains(&NumberToken { canonical: "2.4".into(), percent: true }));
        assert!(set.contains(&NumberToken { canonical: "410".into(), percent: false }));
    }

    #[test]
    fn thousands_separators_unify_values() {
        let set = extract_numbers("1,000 t vs 1000 t");
        assert_eq!(set.len(), 1);
        let (token, surfaces) = set.entries.iter().next().unwrap();
        assert_eq!(token.canonical, "1000");
        assert_eq!(surfaces, &vec!["1,000".to_string(), "1000".to_string()]);
    }

    #[test]
    fn decimal_forms_canonicalize_to_one_value() {
        let set = extract_numbers("0.50 then .5 then 0.5 then +0.500");
        assert_eq!(set.len(), 1);
        assert!(set.contains(&NumberToken { canonical: "0.5".into(), percent: false }));
    }

    #[test]
    fn digits_inside_words_are_not_numbers() {
        assert!(extract_numbers("CO2 and v1.5 and B612").is_empty());
    }

    #[test]
    fn sign_and_percent_are_part_of_identity() {
        let set = extract_numbers("-5 vs 5 vs 7% vs 7");
        assert_eq!(set.len(), 4);
        assert!(set.contains(&NumberToken { canonical: "-5".into(), percent: false }));
        assert!(set.contains(&NumberToken { canonical: "7".into(), percent: true }));
        assert!(set.contains(&NumberToken { canonical: "7".into(), percent: false }));
    }

    #[test]
    fn overlap_is_zero_for_numberless_completions() {
        assert_eq!(number_overlap("no digits here", "yet 42 is present"), 0.0);
    }

    #[test]
    fn overlap_counts_completion_side_fractions() {
        // Completion has {3, 7}; chunk has {3} → 1/2.
        assert!((number_overlap("values 3 and 7", "only 3 here") - 0.5).abs() < 1e-12);
        // Full containment → 1.
        assert!((number_overlap("rose 2.4% in 2020", "2.4% growth in 2020") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_selection_prefers_the_quoted_chunk() {
        let embedder = HashEmbedder::new(48, 12);
        let cfg = GroundingConfig::default();
        let completion = "global mean sea level rose 4.5 mm per year after 2013";
        let candidates = vec![
            chunk("doc/1/0", "ocean circulation patterns shift with the seasons"),
            chunk("doc/1/105", "global mean sea level rose 4.5 mm per year after 2013"),
            chunk("doc/2/0", "farm yields depend on irrigation and soil"),
        ];
        let (winner, scores) = select_reference(
            "how fast did sea level rise recently?",
            completion,
            &candidates,
            &embedder,
            &cfg,
        )
        .unwrap();
        assert_eq!(winner, "doc/1/105");
        assert_eq!(scores.len(), 3);
        let winning = scores.iter().find(|s| s.chunk_id == winner).unwrap();
        assert!((winning.sim_answer - 1.0).abs() < 1e-6, "verbatim quote embeds identically");
        assert_eq!(winning.number_overlap, 1.0);
    }

    #[test]
    fn ties_go_to_the_lowest_chunk_id() {
        let embedder = HashEmbedder::new(32, 3);
        let cfg = GroundingConfig::default();
        let text = "identical candidate text with the number 9";
        let candidates = vec![chunk("z/1/0", text), chunk("a/1/0", text)];
        let (winner, _) =
            select_reference("prompt about 9", "the number 9", &candidates, &embedder, &cfg)
                .unwrap();
        assert_eq!(winner, "a/1/0");
    }

    #[test]
    fn no_candidates_is_an_error() {
        let embedder = HashEmbedder::new(16, 0);
        let err = select_reference("p", "c", &[], &embedder, &GroundingConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::NoCandidates));
    }

    #[test]
    fn scaling_all_weights_preserves_the_argmax() {
        let embedder = HashEmbedder::new(48, 5);
        let base = GroundingConfig::default();
        let scaled = GroundingConfig {
            w_answer: base.w_answer * 3.0,
            w_prompt: base.w_prompt * 3.0,
            w_numbers: base.w_numbers * 3.0,
            ..base.clone()
        };
        let candidates = vec![
            chunk("a/1/0", "emissions fell 7% after the carbon price doubled"),
            chunk("b/1/0", "monsoon onset shifted earlier across the basin"),
            chunk("c/1/0", "the carbon price doubled and emissions fell 7% that year"),
        ];
        let prompt = "what happened when the carbon price doubled?";
        let completion = "emissions fell 7%";
        let (w1, _) = select_reference(prompt, completion, &candidates, &embedder, &base).unwrap();
        let (w2, _) = select_reference(prompt, completion, &candidates, &embedder, &scaled).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn distractors_exclude_the_reference_and_respect_n() {
        let embedder = HashEmbedder::new(32, 8);
        let cfg = GroundingConfig { n_distractors: 2, ..GroundingConfig::default() };
        let pool = vec![
            chunk("p/1/0", "tide gauges show rising water in the harbor"),
            chunk("p/2/0", "sea level and coastal flooding questions continue"),
            chunk("p/3/0", "insurance premiums respond to flood maps"),
            chunk("ref/1/0", "the reference itself"),
        ];
        let distractors = select_distractors(
            "sea level rise and coastal flooding",
            "water rose 10 cm",
            &pool,
            Some("ref/1/0"),
            &embedder,
            &cfg,
        )
        .unwrap();
        assert_eq!(distractors.len(), 2);
        assert!(distractors.iter().all(|d| d.chunk_id != "ref/1/0"));
        assert!(distractors[0].score >= distractors[1].score);
    }

    #[test]
    fn context_formatting_matches_the_citation_contract() {
        assert_eq!(format_context(&["textA", "textB"], true), "[[0]] textA\n[[1]] textB");
        assert_eq!(format_context(&["textA", "textB"], false), "textA\ntextB");
        assert_eq!(format_context::<&str>(&[], true), "");
    }

    #[test]
    fn closed_ended_examples_get_distractors_only() {
        let embedder = HashEmbedder::new(32, 4);
        let cfg = GroundingConfig { n_distractors: 1, ..GroundingConfig::default() };
        let example = IftExample {
            prompt: "pick the best answer about tides".into(),
            completion: "answer B".into(),
            source_url: None,
            task_category: Some("Closed QA".into()),
        };
        let pool = vec![chunk("x/1/0", "tides respond to the moon"), chunk("y/1/0", "crops need rain")];
        let grounded =
            ground_example(&example, &[], &pool, &embedder, &cfg, true).unwrap();
        assert_eq!(grounded.reference_chunk_id, None);
        assert!(grounded.candidate_scores.is_empty());
        assert_eq!(grounded.distractor_chunk_ids.len(), 1);
        assert!(grounded.context.starts_with("[[0]] "));
    }

    #[test]
    fn weight_validation_accepts_defaults_and_rejects_bad_sums() {
        assert!(GroundingConfig::default().validate().is_ok());
        let bad = GroundingConfig { w_answer: 0.9, ..GroundingConfig::default() };
        assert!(bad.validate().is_err());
    }
}
