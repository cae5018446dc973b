//! Shared corpus data model: raw documents on the way into cleaning, and the
//! document → page → chunk hierarchy produced by ingestion.
//!
//! JSONL is the interchange format between pipeline stages; helpers here keep
//! (de)serialization and error annotation in one place. Field order and map
//! types are chosen so that serialization is byte-stable across runs.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A document as it enters the cleaning stage: free text plus light metadata.
///
/// Unknown fields are preserved in `extra` and written back verbatim, so
/// upstream metadata (e.g. page coordinates for a later ingest stage) survives
/// cleaning and deduplication untouched.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawDocument {
    /// Unique id within the corpus file.
    pub id: String,
    /// Document text; may be empty before cleaning, never after.
    pub text: String,
    /// Crawl or download origin, used for metadata-based deduplication.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    /// Optional upstream language hint (advisory only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang_hint: Option<String>,
    /// Pass-through fields not interpreted by cleaning or deduplication.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl RawDocument {
    /// Minimal constructor for tests and fixtures.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawDocument {
            id: id.into(),
            text: text.into(),
            source_url: None,
            lang_hint: None,
            extra: BTreeMap::new(),
        }
    }
}

/// Topical dimension of a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionTag {
    Natural,
    Economic,
    Social,
}

impl DimensionTag {
    /// All dimensions, in canonical order.
    pub const ALL: [DimensionTag; 3] =
        [DimensionTag::Natural, DimensionTag::Economic, DimensionTag::Social];

    /// Canonical lowercase name.
    pub fn as_str(&self) -> &'static str {
        match self {
            DimensionTag::Natural => "natural",
            DimensionTag::Economic => "economic",
            DimensionTag::Social => "social",
        }
    }

    /// Parses a canonical lowercase name; `None` for anything else.
    pub fn parse(s: &str) -> Option<DimensionTag> {
        match s {
            "natural" => Some(DimensionTag::Natural),
            "economic" => Some(DimensionTag::Economic),
            "social" => Some(DimensionTag::Social),
            _ => None,
        }
    }
}

impl fmt::Display for DimensionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One page of a document, with the filter outcome recorded.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Page {
    /// 1-based page number, strictly increasing within a document.
    pub page_no: u32,
    /// Raw page text.
    pub text: String,
    /// Whether the page survived page-level filtering.
    pub kept: bool,
    /// Reject reason (`"toc"`, `"references"`, `"table"`, `"manual"`) when dropped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reject_reason: Option<String>,
}

/// A source document with its pages.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Document {
    /// Stable document identifier (first path segment of every chunk id).
    pub doc_id: String,
    /// Human-readable title, when the source provided one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    /// Crawl or download origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Redistribution note carried through from ingestion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license_note: Option<String>,
    /// All pages in order, kept or not.
    pub pages: Vec<Page>,
}

/// A fixed-length token window cut from one page.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Chunk {
    /// `{doc_id}/{page_no}/{token_start}` — unique within the corpus.
    pub chunk_id: String,
    /// Document the chunk was cut from.
    pub doc_id: String,
    /// Page the chunk was cut from.
    pub page_no: u32,
    /// Chunk text (tokenizer decode of the window).
    pub text: String,
    /// Token span `[start, end)` within the page.
    pub token_span: (usize, usize),
    /// Topical dimensions, filled in by the tagging stage.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<DimensionTag>,
}

impl Chunk {
    /// Builds the canonical chunk id for a window.
    pub fn make_id(doc_id: &str, page_no: u32, token_start: usize) -> String {
        format!("{doc_id}/{page_no}/{token_start}")
    }

    /// True if the chunk carries `dim`.
    pub fn has_tag(&self, dim: DimensionTag) -> bool {
        self.tags.contains(&dim)
    }
}

/// The ingested corpus: documents with page filter outcomes plus all kept
/// chunks. Serializes losslessly (manifest JSON + chunks JSONL).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct CorpusManifest {
    /// Documents with their page filter outcomes.
    pub documents: Vec<Document>,
    /// Every kept chunk, in document/page/window order.
    pub chunks: Vec<Chunk>,
}

impl CorpusManifest {
    /// Looks up a chunk by id (linear scan; corpora here are desk-scale).
    pub fn chunk(&self, chunk_id: &str) -> Option<&Chunk> {
        self.chunks.iter().find(|c| c.chunk_id == chunk_id)
    }

    /// Writes `manifest.json` (documents) and `chunks.jsonl` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let manifest_path = dir.join("manifest.json");
        let docs_json = serde_json::to_string_pretty(&self.documents)?;
        fs::write(&manifest_path, docs_json.as_bytes())
            .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
        write_jsonl(&dir.join("chunks.jsonl"), &self.chunks)
    }

    /// Loads a manifest previously written by [`CorpusManifest::save`].
    pub fn load(dir: &Path) -> Result<CorpusManifest> {
        let manifest_path = dir.join("manifest.json");
        let docs_json = fs::read_to_string(&manifest_path)
            .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
        let documents: Vec<Document> = serde_json::from_str(&docs_json)?;
        let chunks = read_jsonl(&dir.join("chunks.jsonl"))?;
        Ok(CorpusManifest { documents, chunks })
    }
}

/// Reads a JSONL file into a vector of `T`, annotating parse errors with the
/// path and line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(&line).map_err(|e| {
            Error::InvalidInput(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Writes items as one JSON object per line, creating parent directories.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut writer = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item)?;
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    writer.flush().map_err(|e| Error::io(path.display().to_string(), e))
}
