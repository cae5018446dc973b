//! Crate-wide error type.
//!
//! Domain errors carry enough context to be rendered as a structured JSON
//! object on stderr by the CLI (exit code 1) or mapped to an HTTP status by
//! the service.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All domain errors produced by the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    /// Readability scoring needs at least one word token.
    #[error("zero words: readability is undefined for text without word tokens")]
    ZeroWords,

    /// An operation that requires non-empty text received an empty string.
    #[error("empty text: {0}")]
    EmptyText(&'static str),

    /// A page with no tokens cannot be chunked or embedded.
    #[error("empty page: {0}")]
    EmptyPage(&'static str),

    /// The same (doc_id, page_no) appeared twice in the ingest input.
    #[error("duplicate page {doc_id}/{page_no}")]
    DuplicatePage { doc_id: String, page_no: u32 },

    /// Two vectors of different dimensionality were combined.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A search or build operation ran against an index with no entries.
    #[error("empty index")]
    EmptyIndex,

    /// An index entry id appeared twice at build time.
    #[error("duplicate index entry id {0:?}")]
    DuplicateId(String),

    /// An index file failed structural validation (bad magic, truncation,
    /// or inconsistent sidecar).
    #[error("corrupt index: {0}")]
    CorruptIndex(String),

    /// An index file carries an unsupported format version.
    #[error("index version mismatch: found {found:?}, supported {supported:?}")]
    VersionMismatch { found: String, supported: String },

    /// Reference selection received an empty candidate list.
    #[error("no candidate chunks to select from")]
    NoCandidates,

    /// A dimension-routed query found no chunk carrying the dimension.
    #[error("no chunk in the corpus carries dimension {0:?}")]
    EmptyDimension(String),

    /// A system-prompt lookup used a subset name absent from the registry.
    #[error("unknown prompt subset {0:?}")]
    UnknownSubset(String),

    /// An evaluation case names a gold chunk id absent from the index.
    #[error("gold chunk {0:?} is not present in the index")]
    MissingGold(String),

    /// Embedding-cluster selection needs at least as many pairs as clusters.
    #[error("too few pairs: {pairs} pairs for {clusters} clusters")]
    TooFewPairs { pairs: usize, clusters: usize },

    /// Sentence embedding requires at least one word.
    #[error("empty sentence")]
    EmptySentence,

    /// Invalid configuration or malformed input data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Wrapper for I/O failures, annotated with the path when available.
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Wrapper for JSON (de)serialization failures.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A remote embedding or tagging service call failed.
    #[error("remote service error: {0}")]
    Remote(String),
}

impl Error {
    /// Annotates an I/O error with the path that produced it.
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Stable machine-readable code used in structured CLI/service errors.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ZeroWords => "zero_words",
            Error::EmptyText(_) => "empty_text",
            Error::EmptyPage(_) => "empty_page",
            Error::DuplicatePage { .. } => "duplicate_page",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::EmptyIndex => "empty_index",
            Error::DuplicateId(_) => "duplicate_id",
            Error::CorruptIndex(_) => "corrupt_index",
            Error::VersionMismatch { .. } => "version_mismatch",
            Error::NoCandidates => "no_candidates",
            Error::EmptyDimension(_) => "empty_dimension",
            Error::UnknownSubset(_) => "unknown_subset",
            Error::MissingGold(_) => "missing_gold",
            Error::TooFewPairs { .. } => "too_few_pairs",
            Error::EmptySentence => "empty_sentence",
            Error::InvalidInput(_) => "invalid_input",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Remote(_) => "remote",
        }
    }
}
