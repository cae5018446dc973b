//! Engine configuration: file paths, embedder selection, and per-stage
//! tuning, loaded from a single JSON file.
//!
//! Every field has a default so a partial config file is valid. Credentials
//! are never stored in the file itself; remote backends name an environment
//! variable that holds the token.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clean::CleanConfig;
use crate::dedup::DedupConfig;
use crate::dimensions::TagConfig;
use crate::embed::{EmbedConfig, Embedder, HashEmbedder, RemoteEmbedder};
use crate::error::{Error, Result};
use crate::ground::GroundingConfig;
use crate::index::RetrievalConfig;
use crate::ingest::IngestConfig;
use crate::select::ECConfig;

/// Which embedding backend to use.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbedderSelection {
    /// Deterministic offline hash embedder.
    Hash {
        /// Vector dimensionality.
        dim: usize,
        /// Seed for the per-token vector family.
        seed: u64,
    },
    /// Remote embedding HTTP service.
    Remote {
        /// Endpoint receiving `{"texts": [...]}` POST requests.
        endpoint: String,
        /// Vector dimensionality the service returns.
        dim: usize,
        /// Maximum tokens per request the service accepts.
        max_seq_len: usize,
        /// Name of the environment variable holding the bearer token.
        auth_token_env: Option<String>,
    },
}

impl Default for EmbedderSelection {
    fn default() -> Self {
        EmbedderSelection::Hash { dim: 64, seed: 42 }
    }
}

/// Filesystem layout of a built corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EnginePaths {
    /// Directory holding `manifest.json` and `chunks.jsonl`.
    pub corpus_dir: PathBuf,
    /// Directory holding the page-level vector index.
    pub page_index_dir: PathBuf,
    /// Directory holding the chunk-level vector index.
    pub chunk_index_dir: PathBuf,
    /// Optional prompt-registry JSON; the built-in registry when absent.
    pub prompt_registry: Option<PathBuf>,
    /// Optional tagging lexicon JSON; the built-in lexicon when absent.
    pub lexicon: Option<PathBuf>,
}

impl Default for EnginePaths {
    fn default() -> Self {
        EnginePaths {
            corpus_dir: PathBuf::from("corpus"),
            page_index_dir: PathBuf::from("index/pages"),
            chunk_index_dir: PathBuf::from("index/chunks"),
            prompt_registry: None,
            lexicon: None,
        }
    }
}

/// Service-facing settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceSettings {
    /// Address the HTTP service binds to.
    pub bind: String,
    /// System-prompt subset used when a query names none.
    pub default_subset: String,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        ServiceSettings {
            bind: "127.0.0.1:8080".to_string(),
            default_subset: "Grounded Non-Expert Demonstrations".to_string(),
        }
    }
}

/// Full engine configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Corpus and index locations.
    pub paths: EnginePaths,
    /// Embedding backend.
    pub embedder: EmbedderSelection,
    /// Page/chunk retrieval depths and probe count.
    pub retrieval: RetrievalConfig,
    /// Reference/distractor scoring weights.
    pub grounding: GroundingConfig,
    /// Cleaning filter thresholds.
    pub clean: CleanConfig,
    /// Near-duplicate detection settings.
    pub dedup: DedupConfig,
    /// Chunk window geometry.
    pub ingest: IngestConfig,
    /// Page embedding window geometry.
    pub embed: EmbedConfig,
    /// Bitext selection settings.
    pub ec: ECConfig,
    /// Tagging retry policy.
    pub tagging: TagConfig,
    /// HTTP service settings.
    pub service: ServiceSettings,
}

impl EngineConfig {
    /// Loads configuration JSON from a file.
    pub fn load(path: &Path) -> Result<EngineConfig> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&raw)?)
    }

    /// Writes the configuration as pretty JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Instantiates the configured embedding backend.
    ///
    /// For remote backends the bearer token is read from the environment
    /// variable named in the config; the file never holds the credential.
    pub fn build_embedder(&self) -> Result<Box<dyn Embedder + Send + Sync>> {
        match &self.embedder {
            EmbedderSelection::Hash { dim, seed } => Ok(Box::new(HashEmbedder::new(*dim, *seed))),
            EmbedderSelection::Remote { endpoint, dim, max_seq_len, auth_token_env } => {
                let token = match auth_token_env {
                    None => None,
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        Error::InvalidInput(format!(
                            "environment variable {var} for the embedder token is not set"
                        ))
                    })?),
                };
                Ok(Box::new(RemoteEmbedder::new(
                    endpoint.clone(),
                    token,
                    *dim,
                    *max_seq_len,
                )))
            }
        }
    }

    /// Checks that every path a query engine needs exists.
    pub fn validate_query_paths(&self) -> Result<()> {
        let required = [
            self.paths.corpus_dir.join("manifest.json"),
            self.paths.corpus_dir.join("chunks.jsonl"),
            self.paths.page_index_dir.join("vectors.bin"),
            self.paths.chunk_index_dir.join("vectors.bin"),
        ];
        for path in required {
            if !path.exists() {
                return Err(Error::InvalidInput(format!(
                    "required path does not exist: {}",
                    path.display()
                )));
            }
        }
        for optional in [&self.paths.prompt_registry, &self.paths.lexicon].into_iter().flatten() {
            if !optional.exists() {
                return Err(Error::InvalidInput(format!(
                    "configured path does not exist: {}",
                    optional.display()
                )));
            }
        }
        Ok(())
    }
}
