//! Corpus preparation, hierarchical retrieval, and grounded prompt assembly
//! for retrieval-augmented generation over a domain document collection.
//!
//! The crate is organized as a pipeline of small, independently testable
//! stages:
//!
//! - [`clean`] — quality filtering of raw text (normalization, PII redaction,
//!   readability / symbol-ratio / language filters).
//! - [`dedup`] — MinHash near-duplicate removal.
//! - [`ingest`] — page filtering and fixed-length overlapping chunking into a
//!   document → page → chunk hierarchy.
//! - [`embed`] — embedding interfaces, a deterministic hash embedder for
//!   tests, a remote-service client, and windowed page embeddings.
//! - [`index`] — a flat / k-means-partitioned vector index with binary
//!   persistence and two-stage (page → chunk) retrieval.
//! - [`ground`] — reference and distractor selection for instruction tuning
//!   examples, with numeric-overlap scoring and citation formatting.
//! - [`dimensions`] — topical dimension tagging (natural / economic / social),
//!   dimension-routed retrieval, and a system-prompt registry.
//! - [`prompt`] — byte-exact ChatML prompt rendering.
//! - [`select`] — bitext selection by exact term match and by embedding
//!   clusters seeded with in-domain text.
//! - [`evalkit`] — recall@k retrieval evaluation.
//! - [`cli`] / [`service`] — a thin subcommand front end and a read-only HTTP
//!   query service over a loaded index.
//!
//! Every stage is deterministic for a fixed seed: rerunning the pipeline on
//! the same input produces byte-identical artifacts.

pub mod clean;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod dedup;
pub mod dimensions;
pub mod embed;
pub mod engine;
pub mod error;
pub mod evalkit;
pub mod ground;
pub mod hashing;
pub mod index;
pub mod ingest;
pub mod kmeans;
pub mod prompt;
pub mod select;
pub mod service;

pub use error::{Error, Result};
