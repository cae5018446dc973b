//! Tagging chunks with natural / economic / social dimension labels and
//! routing retrieval through those tags.
//!
//! Tagging has two interchangeable backends behind the [`Tagger`] trait: a
//! deterministic [`LexiconTagger`] driven by per-dimension keyword lists, and
//! a [`ServiceTagger`] that calls a chat-completion HTTP endpoint with a
//! few-shot labelling prompt. Raw tagger responses are parsed leniently by
//! [`parse_tags`] and persisted verbatim in [`TagRecord`]s for audit.
//! [`query_dimension`] then restricts hierarchical retrieval to chunks that
//! carry a requested tag, and [`PromptRegistry`] supplies per-subset system
//! prompts with an optional dimension-focus suffix.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusManifest, DimensionTag};
use crate::embed::EmbeddingVector;
use crate::error::{Error, Result};
use crate::index::{search_where, PageRef, RetrievalConfig, RetrievalResult, VectorIndex};

/// Built-in keyword lists for the offline lexicon tagger.
pub const DEFAULT_LEXICON_JSON: &str = include_str!("../data/dimension_lexicon.json");

/// Built-in few-shot labelling prompt for the service tagger; the chunk to
/// label replaces the `{chunk}` placeholder.
pub const TAGGING_PROMPT_TEMPLATE: &str = include_str!("../data/tagging_prompt.txt");

/// Built-in registry of per-subset system prompts.
pub const DEFAULT_PROMPT_REGISTRY_JSON: &str = include_str!("../data/prompt_registry.json");

/// Outcome of leniently parsing a raw tag string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTags {
    /// Recognized dimension tags, deduplicated.
    pub tags: BTreeSet<DimensionTag>,
    /// Tokens that were not valid tag names, kept for warning records.
    pub unknown: Vec<String>,
}

/// Parses a comma-separated tag string, keeping only valid dimension names.
///
/// Tokens are lowercased and trimmed; duplicates collapse; unrecognized
/// tokens are recorded rather than treated as errors, and an empty result is
/// permitted.
pub fn parse_tags(raw: &str) -> ParsedTags {
    let mut parsed = ParsedTags::default();
    for token in raw.split(',') {
        let token = token.trim().to_lowercase();
        if token.is_empty() {
            continue;
        }
        match DimensionTag::parse(&token) {
            Some(tag) => {
                parsed.tags.insert(tag);
            }
            None => parsed.unknown.push(token),
        }
    }
    parsed
}

/// A backend that labels one chunk of text with a raw tag string.
pub trait Tagger {
    /// Returns a raw tag string such as `"natural,social"` for the chunk.
    fn tag(&self, chunk_text: &str) -> Result<String>;
    /// Short backend name recorded alongside tagging output.
    fn name(&self) -> &'static str;
}

/// Deterministic keyword-list tagger; a dimension fires when any of its
/// keywords appears as a whole word in the lowercased chunk.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    keywords: BTreeMap<DimensionTag, BTreeSet<String>>,
}

impl Default for LexiconTagger {
    fn default() -> Self {
        Self::from_json_str(DEFAULT_LEXICON_JSON).expect("built-in lexicon must parse")
    }
}

impl LexiconTagger {
    /// Builds a tagger from a JSON object mapping dimension name → keywords.
    pub fn from_json_str(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(json)?;
        let mut keywords = BTreeMap::new();
        for (name, words) in raw {
            let dim = DimensionTag::parse(&name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown lexicon dimension: {name}")))?;
            let set: BTreeSet<String> = words.into_iter().map(|w| w.to_lowercase()).collect();
            keywords.insert(dim, set);
        }
        Ok(LexiconTagger { keywords })
    }

    /// Loads lexicon JSON from a file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&json)
    }

    /// Keywords registered for one dimension.
    pub fn keywords(&self, dim: DimensionTag) -> Option<&BTreeSet<String>> {
        self.keywords.get(&dim)
    }

    fn words(text: &str) -> BTreeSet<String> {
        let mut words = BTreeSet::new();
        let mut current = String::new();
        for ch in text.chars() {
            if ch.is_alphanumeric() {
                current.extend(ch.to_lowercase());
            } else if !current.is_empty() {
                words.insert(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            words.insert(current);
        }
        words
    }
}

impl Tagger for LexiconTagger {
    fn tag(&self, chunk_text: &str) -> Result<String> {
        let words = Self::words(chunk_text);
        let mut fired = Vec::new();
        for dim in DimensionTag::ALL {
            if let Some(keys) = self.keywords.get(&dim) {
                if keys.iter().any(|k| words.contains(k)) {
                    fired.push(dim.as_str());
                }
            }
        }
        Ok(fired.join(","))
    }

    fn name(&self) -> &'static str {
        "lexicon"
    }
}

/// Tagger that asks a chat-completion HTTP service to label each chunk.
pub struct ServiceTagger {
    endpoint: String,
    model: String,
    auth_token: Option<String>,
    template: String,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for ServiceTagger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceTagger")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("auth_token", &self.auth_token.as_deref().map(|_| "<redacted>"))
            .finish_non_exhaustive()
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

impl ServiceTagger {
    /// Creates a tagger for a chat-completion endpoint using the built-in
    /// labelling prompt.
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        ServiceTagger {
            endpoint: endpoint.into(),
            model: model.into(),
            auth_token: None,
            template: TAGGING_PROMPT_TEMPLATE.to_string(),
            client: reqwest::blocking::Client::new(),
        }
    }

    /// Attaches a bearer token sent with every request.
    pub fn with_auth_token(mut self, token: impl Into<String>) -> Self {
        self.auth_token = Some(token.into());
        self
    }

    /// Replaces the labelling prompt template; it must contain `{chunk}`.
    pub fn with_template(mut self, template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        if !template.contains("{chunk}") {
            return Err(Error::InvalidInput(
                "tagging template must contain a {chunk} placeholder".into(),
            ));
        }
        self.template = template;
        Ok(self)
    }

    /// The full prompt sent to the service for one chunk.
    pub fn prompt_for(&self, chunk_text: &str) -> String {
        self.template.replace("{chunk}", chunk_text)
    }
}

impl Tagger for ServiceTagger {
    fn tag(&self, chunk_text: &str) -> Result<String> {
        let prompt = self.prompt_for(chunk_text);
        let body = ChatRequest {
            model: &self.model,
            messages: vec![ChatMessage { role: "user", content: &prompt }],
            temperature: 0.0,
        };
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(token) = &self.auth_token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .map_err(|e| Error::Remote(format!("tagging request failed: {e}")))?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::Remote(format!("tagging service returned {status}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| Error::Remote(format!("invalid tagging response: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Error::Remote("tagging response had no choices".into()))?;
        Ok(choice.message.content)
    }

    fn name(&self) -> &'static str {
        "service"
    }
}

/// Retry policy for corpus tagging.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TagConfig {
    /// Additional attempts after a failed tagger call before giving up.
    pub max_retries: u32,
}

impl Default for TagConfig {
    fn default() -> Self {
        TagConfig { max_retries: 2 }
    }
}

/// Audit record for one chunk's tagging outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TagRecord {
    /// Chunk this record describes.
    pub chunk_id: String,
    /// Backend that produced the response.
    pub tagger: String,
    /// Verbatim tagger response, when a call succeeded.
    pub raw_response: Option<String>,
    /// Parsed tags applied to the chunk.
    pub tags: Vec<DimensionTag>,
    /// Unrecognized tokens dropped during parsing.
    pub unknown_tokens: Vec<String>,
    /// Final error message when all attempts failed.
    pub error: Option<String>,
    /// Number of tagger calls made for this chunk.
    pub attempts: u32,
}

/// Tags every chunk in the manifest, retrying failed tagger calls.
///
/// Chunks whose calls exhaust the retry budget are left untagged; the
/// returned records preserve raw responses and errors for audit.
pub fn tag_corpus(
    manifest: &mut CorpusManifest,
    tagger: &dyn Tagger,
    cfg: &TagConfig,
) -> Vec<TagRecord> {
    let mut records = Vec::with_capacity(manifest.chunks.len());
    for chunk in &mut manifest.chunks {
        let mut attempts = 0;
        let mut outcome: std::result::Result<String, Error> =
            Err(Error::InvalidInput("tagger was never called".into()));
        while attempts <= cfg.max_retries {
            attempts += 1;
            outcome = tagger.tag(&chunk.text);
            if outcome.is_ok() {
                break;
            }
        }
        let record = match outcome {
            Ok(raw) => {
                let parsed = parse_tags(&raw);
                chunk.tags = parsed.tags.iter().copied().collect();
                TagRecord {
                    chunk_id: chunk.chunk_id.clone(),
                    tagger: tagger.name().to_string(),
                    raw_response: Some(raw),
                    tags: chunk.tags.clone(),
                    unknown_tokens: parsed.unknown,
                    error: None,
                    attempts,
                }
            }
            Err(err) => {
                chunk.tags.clear();
                TagRecord {
                    chunk_id: chunk.chunk_id.clone(),
                    tagger: tagger.name().to_string(),
                    raw_response: None,
                    tags: Vec::new(),
                    unknown_tokens: Vec::new(),
                    error: Some(err.to_string()),
                    attempts,
                }
            }
        };
        records.push(record);
    }
    records
}

/// Hierarchical retrieval restricted to chunks tagged with `dim`.
///
/// Pages are ranked exactly as in plain hierarchical retrieval; the chunk
/// stage then keeps only chunks on top pages whose manifest tag set contains
/// `dim`. Untagged chunks never appear. Errors with
/// [`Error::EmptyDimension`] when no chunk in the manifest carries the tag.
pub fn query_dimension(
    page_index: &VectorIndex,
    chunk_index: &VectorIndex,
    manifest: &CorpusManifest,
    query: &EmbeddingVector,
    dim: DimensionTag,
    cfg: &RetrievalConfig,
) -> Result<RetrievalResult> {
    let tagged: BTreeSet<&str> = manifest
        .chunks
        .iter()
        .filter(|c| c.has_tag(dim))
        .map(|c| c.chunk_id.as_str())
        .collect();
    if tagged.is_empty() {
        return Err(Error::EmptyDimension(dim.as_str().to_string()));
    }
    let pages = page_index.search(query, cfg.k_pages, cfg.probes)?;
    let mut allowed: BTreeSet<PageRef> = BTreeSet::new();
    for hit in &pages.hits {
        let payload = hit.payload.clone().ok_or_else(|| {
            Error::InvalidInput("dimension query requires page payloads on the page index".into())
        })?;
        allowed.insert(payload);
    }
    search_where(chunk_index, query, cfg.k_chunks, |entry| {
        let payload = entry.payload.as_ref().ok_or_else(|| {
            Error::InvalidInput("dimension query requires page payloads on the chunk index".into())
        })?;
        Ok(allowed.contains(payload) && tagged.contains(entry.id.as_str()))
    })
}

#[derive(Deserialize)]
struct RegistryFile {
    dimension_suffix: String,
    subsets: BTreeMap<String, String>,
}

/// Registry of per-subset system prompts with a dimension-focus suffix.
#[derive(Debug, Clone)]
pub struct PromptRegistry {
    subsets: BTreeMap<String, String>,
    dimension_suffix: String,
}

impl Default for PromptRegistry {
    fn default() -> Self {
        Self::from_json_str(DEFAULT_PROMPT_REGISTRY_JSON).expect("built-in registry must parse")
    }
}

impl PromptRegistry {
    /// Builds a registry from JSON with `dimension_suffix` and `subsets`.
    pub fn from_json_str(json: &str) -> Result<Self> {
        let raw: RegistryFile = serde_json::from_str(json)?;
        Ok(PromptRegistry { subsets: raw.subsets, dimension_suffix: raw.dimension_suffix })
    }

    /// Loads registry JSON from a file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&json)
    }

    /// Registered subset names in sorted order.
    pub fn subset_names(&self) -> Vec<&str> {
        self.subsets.keys().map(String::as_str).collect()
    }

    /// Returns the system prompt registered for `subset`, appending the
    /// dimension-focus suffix when a dimension is requested.
    pub fn select_system_prompt(
        &self,
        dim: Option<DimensionTag>,
        subset: &str,
    ) -> Result<String> {
        let base = self
            .subsets
            .get(subset)
            .ok_or_else(|| Error::UnknownSubset(subset.to_string()))?;
        match dim {
            None => Ok(base.clone()),
            Some(dim) => {
                let suffix = self.dimension_suffix.replace("{dimension}", dim.as_str());
                Ok(format!("{base}{suffix}"))
            }
        }
    }
}
