//! Loaded query engine: corpus manifest, page and chunk indexes, embedder,
//! and prompt registry behind one query interface.
//!
//! The engine is immutable once loaded and is shared by the `query` CLI
//! command and the HTTP service; both produce the same
//! [`QueryOutcome`] for the same request, which keeps responses replayable.

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::corpus::{Chunk, CorpusManifest, DimensionTag, Document};
use crate::dimensions::{query_dimension, PromptRegistry};
use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::ground::format_context;
use crate::index::{hierarchical_query, IndexMode, RetrievalConfig, VectorIndex};

/// One retrieval request against a loaded engine.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryRequest {
    /// Query text; must be non-empty.
    pub text: String,
    /// Restrict results to chunks carrying this dimension tag.
    pub dimension: Option<DimensionTag>,
    /// Override for the configured page depth.
    pub k_pages: Option<usize>,
    /// Override for the configured chunk count.
    pub k_chunks: Option<usize>,
    /// Override for the configured probe count.
    pub probes: Option<usize>,
    /// Prefix context chunks with citation tokens.
    pub with_citations: bool,
    /// System-prompt subset; the configured default when absent.
    pub subset: Option<String>,
}

/// One retrieved chunk with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitDetail {
    /// Chunk id (`{doc_id}/{page_no}/{token_start}`).
    pub chunk_id: String,
    /// Dot-product similarity with the query.
    pub score: f32,
    /// Document the chunk came from.
    pub doc_id: String,
    /// Page the chunk came from.
    pub page_no: u32,
    /// Chunk text.
    pub text: String,
    /// Dimension tags carried by the chunk.
    pub tags: Vec<DimensionTag>,
}

/// Deterministic result of one query (no timing information).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    /// Ranked hits, best first.
    pub hits: Vec<HitDetail>,
    /// Context block rendered from the hit texts.
    pub context: String,
    /// System prompt selected for the request.
    pub system_prompt: String,
}

/// Summary of the loaded corpus and index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    /// Documents in the manifest.
    pub documents: usize,
    /// Pages in the page index.
    pub pages_indexed: usize,
    /// Chunks in the chunk index.
    pub chunks_indexed: usize,
    /// Vector dimensionality.
    pub dim: usize,
    /// Chunk index search mode.
    pub mode: IndexMode,
}

/// An immutable, fully loaded retrieval engine.
pub struct QueryEngine {
    manifest: CorpusManifest,
    page_index: VectorIndex,
    chunk_index: VectorIndex,
    embedder: Box<dyn Embedder + Send + Sync>,
    registry: PromptRegistry,
    retrieval: RetrievalConfig,
    default_subset: String,
}

impl std::fmt::Debug for QueryEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QueryEngine")
            .field("documents", &self.manifest.documents.len())
            .field("pages_indexed", &self.page_index.len())
            .field("chunks_indexed", &self.chunk_index.len())
            .finish_non_exhaustive()
    }
}

impl QueryEngine {
    /// Loads every component named by the configuration.
    pub fn load(cfg: &EngineConfig) -> Result<QueryEngine> {
        cfg.validate_query_paths()?;
        let manifest = CorpusManifest::load(&cfg.paths.corpus_dir)?;
        let page_index = VectorIndex::load(&cfg.paths.page_index_dir)?;
        let chunk_index = VectorIndex::load(&cfg.paths.chunk_index_dir)?;
        let embedder = cfg.build_embedder()?;
        let registry = match &cfg.paths.prompt_registry {
            Some(path) => PromptRegistry::from_path(path)?,
            None => PromptRegistry::default(),
        };
        QueryEngine::from_parts(
            manifest,
            page_index,
            chunk_index,
            embedder,
            registry,
            cfg.retrieval.clone(),
            cfg.service.default_subset.clone(),
        )
    }

    /// Assembles an engine from already-loaded components.
    pub fn from_parts(
        manifest: CorpusManifest,
        page_index: VectorIndex,
        chunk_index: VectorIndex,
        embedder: Box<dyn Embedder + Send + Sync>,
        registry: PromptRegistry,
        retrieval: RetrievalConfig,
        default_subset: String,
    ) -> Result<QueryEngine> {
        if page_index.dim() != chunk_index.dim() {
            return Err(Error::DimensionMismatch {
                left: page_index.dim(),
                right: chunk_index.dim(),
            });
        }
        if embedder.dim() != chunk_index.dim() {
            return Err(Error::DimensionMismatch {
                left: embedder.dim(),
                right: chunk_index.dim(),
            });
        }
        Ok(QueryEngine {
            manifest,
            page_index,
            chunk_index,
            embedder,
            registry,
            retrieval,
            default_subset,
        })
    }

    /// Runs one retrieval request and assembles its context and prompt.
    pub fn query(&self, request: &QueryRequest) -> Result<QueryOutcome> {
        if request.text.trim().is_empty() {
            return Err(Error::InvalidInput("query text must be non-empty".into()));
        }
        let cfg = RetrievalConfig {
            k_pages: request.k_pages.unwrap_or(self.retrieval.k_pages),
            k_chunks: request.k_chunks.unwrap_or(self.retrieval.k_chunks),
            probes: request.probes.unwrap_or(self.retrieval.probes),
        };
        let vector = self.embedder.embed(&request.text)?;
        let result = match request.dimension {
            Some(dim) => query_dimension(
                &self.page_index,
                &self.chunk_index,
                &self.manifest,
                &vector,
                dim,
                &cfg,
            )?,
            None => hierarchical_query(&self.page_index, &self.chunk_index, &vector, &cfg)?,
        };

        let mut hits = Vec::with_capacity(result.hits.len());
        for hit in &result.hits {
            let chunk = self.manifest.chunk(&hit.id).ok_or_else(|| {
                Error::CorruptIndex(format!("indexed chunk {} is missing from the manifest", hit.id))
            })?;
            hits.push(HitDetail {
                chunk_id: hit.id.clone(),
                score: hit.score,
                doc_id: chunk.doc_id.clone(),
                page_no: chunk.page_no,
                text: chunk.text.clone(),
                tags: chunk.tags.clone(),
            });
        }
        let texts: Vec<&str> = hits.iter().map(|h| h.text.as_str()).collect();
        let context = format_context(&texts, request.with_citations);
        let subset = request.subset.as_deref().unwrap_or(&self.default_subset);
        let system_prompt = self.registry.select_system_prompt(request.dimension, subset)?;
        Ok(QueryOutcome { hits, context, system_prompt })
    }

    /// Looks up a chunk by id.
    pub fn chunk(&self, chunk_id: &str) -> Option<&Chunk> {
        self.manifest.chunk(chunk_id)
    }

    /// Looks up a document by id for provenance.
    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.manifest.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// Summary statistics of the loaded corpus and index.
    pub fn stats(&self) -> EngineStats {
        EngineStats {
            documents: self.manifest.documents.len(),
            pages_indexed: self.page_index.len(),
            chunks_indexed: self.chunk_index.len(),
            dim: self.chunk_index.dim(),
            mode: self.chunk_index.mode(),
        }
    }
}
