//! Flat and k-means-partitioned vector search with binary persistence, plus
//! two-stage page → chunk retrieval.
//!
//! Exact mode scans every entry and is the ground truth the partitioned mode
//! is measured against. Partitioned mode clusters entries at build time and
//! probes only the nearest `probes` partitions at query time; probing every
//! partition reproduces exact search. Ranking is always score-descending with
//! ties broken by ascending id, so results are total-ordered and stable.
//!
//! On disk an index is a directory holding `vectors.bin` (magic `HGRIDX1\0`,
//! dimension as little-endian u32, entry count as little-endian u64, then one
//! length-prefixed UTF-8 id followed by the f32 little-endian vector per
//! entry) and `index.json` (mode, seed, partition state, page payloads).

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingVector;
use crate::error::{Error, Result};
use crate::kmeans::{distance_sq, kmeans, KMeansParams};

/// File magic: format name plus a one-byte version and a NUL terminator.
const MAGIC: &[u8; 8] = b"HGRIDX1\0";

/// Which document page an entry belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PageRef {
    pub doc_id: String,
    pub page_no: u32,
}

/// One indexed vector.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub id: String,
    pub vector: EmbeddingVector,
    /// Page provenance; required for hierarchical retrieval over chunks.
    pub payload: Option<PageRef>,
}

/// Build-time mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    Exact,
    Partitioned,
}

/// k-means partition state for partitioned mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partitions {
    pub centroids: Vec<Vec<f32>>,
    /// Entry indices per partition.
    pub members: Vec<Vec<usize>>,
}

/// An immutable vector index.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    entries: Vec<IndexEntry>,
    mode: IndexMode,
    seed: u64,
    partitions: Option<Partitions>,
}

/// Two-stage retrieval parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RetrievalConfig {
    /// Pages kept from the first stage.
    pub k_pages: usize,
    /// Chunks returned from the second stage.
    pub k_chunks: usize,
    /// Partitions probed per search on a partitioned index (≥ 1).
    pub probes: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { k_pages: 60, k_chunks: 5, probes: 1 }
    }
}

/// One scored result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: String,
    pub score: f32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<PageRef>,
}

/// Ranked results: scores non-increasing, ties in ascending id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub hits: Vec<SearchHit>,
}

fn rank_descending(scored: &mut Vec<(f32, usize)>, entries: &[IndexEntry]) {
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| entries[a.1].id.cmp(&entries[b.1].id))
    });
}

impl VectorIndex {
    /// Builds an index over `entries`.
    ///
    /// `partition_count` applies to partitioned mode only and defaults to
    /// `⌈√N⌉`. Errors: [`Error::EmptyIndex`] for no entries,
    /// [`Error::DimensionMismatch`] for inconsistent vectors,
    /// [`Error::DuplicateId`] for repeated ids.
    pub fn build(
        entries: Vec<IndexEntry>,
        mode: IndexMode,
        partition_count: Option<usize>,
        seed: u64,
    ) -> Result<VectorIndex> {
        if entries.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let dim = entries[0].vector.dim();
        if let Some(bad) = entries.iter().find(|e| e.vector.dim() != dim) {
            return Err(Error::DimensionMismatch { left: dim, right: bad.vector.dim() });
        }
        let mut ids = BTreeSet::new();
        for entry in &entries {
            if !ids.insert(entry.id.as_str()) {
                return Err(Error::DuplicateId(entry.id.clone()));
            }
        }

        let partitions = match mode {
            IndexMode::Exact => None,
            IndexMode::Partitioned => {
                let k = partition_count
                    .unwrap_or_else(|| (entries.len() as f64).sqrt().ceil() as usize)
                    .clamp(1, entries.len());
                let points: Vec<Vec<f32>> =
                    entries.iter().map(|e| e.vector.as_slice().to_vec()).collect();
                let result = kmeans(&points, &KMeansParams::new(k, seed))?;
                let mut members = vec![Vec::new(); k];
                for (idx, &cluster) in result.assignments.iter().enumerate() {
                    members[cluster].push(idx);
                }
                Some(Partitions { centroids: result.centroids, members })
            }
        };
        Ok(VectorIndex { dim, entries, mode, seed, partitions })
    }

    /// Convenience exact-mode constructor.
    pub fn build_exact(entries: Vec<IndexEntry>) -> Result<VectorIndex> {
        VectorIndex::build(entries, IndexMode::Exact, None, 0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn partition_count(&self) -> usize {
        self.partitions.as_ref().map_or(1, |p| p.centroids.len())
    }

    /// Looks up one entry by id.
    pub fn entry(&self, id: &str) -> Option<&IndexEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    fn score_subset(&self, query: &EmbeddingVector, subset: impl Iterator<Item = usize>) -> Vec<(f32, usize)> {
        subset
            .map(|idx| {
                let score: f32 = query
                    .as_slice()
                    .iter()
                    .zip(self.entries[idx].vector.as_slice())
                    .map(|(a, b)| a * b)
                    .sum();
                (score, idx)
            })
            .collect()
    }

    /// Top-`k` entries by cosine similarity. On a partitioned index only the
    /// `probes` nearest partitions are scanned (probing all partitions equals
    /// exact search); exact mode ignores `probes`.
    pub fn search(&self, query: &EmbeddingVector, k: usize, probes: usize) -> Result<RetrievalResult> {
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: query.dim() });
        }
        let mut scored = match &self.partitions {
            None => self.score_subset(query, 0..self.entries.len()),
            Some(parts) => {
                let mut order: Vec<(f64, usize)> = parts
                    .centroids
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (distance_sq(query.as_slice(), c), i))
                    .collect();
                order.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then_with(|| a.1.cmp(&b.1))
                });
                let probes = probes.max(1).min(parts.centroids.len());
                let subset = order[..probes]
                    .iter()
                    .flat_map(|&(_, p)| parts.members[p].iter().copied())
                    .collect::<Vec<_>>();
                self.score_subset(query, subset.into_iter())
            }
        };
        rank_descending(&mut scored, &self.entries);
        scored.truncate(k);
        Ok(RetrievalResult {
            hits: scored
                .into_iter()
                .map(|(score, idx)| SearchHit {
                    id: self.entries[idx].id.clone(),
                    score,
                    payload: self.entries[idx].payload.clone(),
                })
                .collect(),
        })
    }

    /// Serializes the index into `dir/vectors.bin` + `dir/index.json`.
    /// Round-trips bit-exactly.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let bin_path = dir.join("vectors.bin");
        let mut bin: Vec<u8> = Vec::new();
        bin.extend_from_slice(MAGIC);
        bin.extend_from_slice(&(self.dim as u32).to_le_bytes());
        bin.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for entry in &self.entries {
            let id = entry.id.as_bytes();
            bin.extend_from_slice(&(id.len() as u32).to_le_bytes());
            bin.extend_from_slice(id);
            for v in entry.vector.as_slice() {
                bin.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(&bin_path, &bin).map_err(|e| Error::io(bin_path.display().to_string(), e))?;

        let payloads: BTreeMap<&str, &PageRef> = self
            .entries
            .iter()
            .filter_map(|e| e.payload.as_ref().map(|p| (e.id.as_str(), p)))
            .collect();
        let sidecar = serde_json::json!({
            "version": 1,
            "mode": self.mode,
            "seed": self.seed,
            "partitions": self.partitions,
            "payloads": payloads,
        });
        let json_path = dir.join("index.json");
        fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)
            .map_err(|e| Error::io(json_path.display().to_string(), e))
    }

    /// Loads an index written by [`VectorIndex::save`].
    ///
    /// Errors: [`Error::VersionMismatch`] for a `HGRIDX` file of another
    /// version, [`Error::CorruptIndex`] for anything else structurally wrong.
    pub fn load(dir: &Path) -> Result<VectorIndex> {
        let bin_path = dir.join("vectors.bin");
        let bytes =
            fs::read(&bin_path).map_err(|e| Error::io(bin_path.display().to_string(), e))?;
        let mut cursor: &[u8] = &bytes;

        let mut magic = [0u8; 8];
        read_exact(&mut cursor, &mut magic)?;
        if &magic[..6] != b"HGRIDX" || magic[7] != 0 {
            return Err(Error::CorruptIndex("bad file magic".into()));
        }
        if magic[6] != b'1' {
            return Err(Error::VersionMismatch {
                found: (magic[6] as char).to_string(),
                supported: "1".into(),
            });
        }
        let mut buf4 = [0u8; 4];
        let mut buf8 = [0u8; 8];
        read_exact(&mut cursor, &mut buf4)?;
        let dim = u32::from_le_bytes(buf4) as usize;
        read_exact(&mut cursor, &mut buf8)?;
        let count = u64::from_le_bytes(buf8) as usize;
        if dim == 0 || count == 0 {
            return Err(Error::CorruptIndex("zero dimension or entry count".into()));
        }

        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            read_exact(&mut cursor, &mut buf4)?;
            let id_len = u32::from_le_bytes(buf4) as usize;
            let mut id_bytes = vec![0u8; id_len];
            read_exact(&mut cursor, &mut id_bytes)?;
            let id = String::from_utf8(id_bytes)
                .map_err(|_| Error::CorruptIndex("entry id is not UTF-8".into()))?;
            let mut values = Vec::with_capacity(dim);
            for _ in 0..dim {
                read_exact(&mut cursor, &mut buf4)?;
                values.push(f32::from_le_bytes(buf4));
            }
            entries.push(IndexEntry { id, vector: EmbeddingVector::from_unit(values), payload: None });
        }
        if !cursor.is_empty() {
            return Err(Error::CorruptIndex("trailing bytes after last entry".into()));
        }

        #[derive(Deserialize)]
        struct Sidecar {
            version: u32,
            mode: IndexMode,
            seed: u64,
            partitions: Option<Partitions>,
            payloads: BTreeMap<String, PageRef>,
        }
        let json_path = dir.join("index.json");
        let sidecar_text = fs::read_to_string(&json_path)
            .map_err(|e| Error::io(json_path.display().to_string(), e))?;
        let sidecar: Sidecar = serde_json::from_str(&sidecar_text)
            .map_err(|e| Error::CorruptIndex(format!("sidecar: {e}")))?;
        if sidecar.version != 1 {
            return Err(Error::VersionMismatch {
                found: sidecar.version.to_string(),
                supported: "1".into(),
            });
        }
        if let Some(parts) = &sidecar.partitions {
            let member_count: usize = parts.members.iter().map(Vec::len).sum();
            if member_count != entries.len()
                || parts.centroids.len() != parts.members.len()
                || parts.centroids.iter().any(|c| c.len() != dim)
                || parts.members.iter().flatten().any(|&i| i >= entries.len())
            {
                return Err(Error::CorruptIndex("partition state inconsistent".into()));
            }
        }
        for entry in &mut entries {
            entry.payload = sidecar.payloads.get(&entry.id).cloned();
        }
        Ok(VectorIndex {
            dim,
            entries,
            mode: sidecar.mode,
            seed: sidecar.seed,
            partitions: sidecar.partitions,
        })
    }
}

fn read_exact(cursor: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    cursor
        .read_exact(buf)
        .map_err(|_| Error::CorruptIndex("file truncated".into()))
}

/// Two-stage retrieval: rank pages, then rank only chunks living on the top
/// `k_pages` pages and return the best `k_chunks`.
///
/// Page and chunk entries must carry [`PageRef`] payloads.
pub fn hierarchical_query(
    page_index: &VectorIndex,
    chunk_index: &VectorIndex,
    query: &EmbeddingVector,
    cfg: &RetrievalConfig,
) -> Result<RetrievalResult> {
    let pages = page_index.search(query, cfg.k_pages, cfg.probes)?;
    let mut allowed: BTreeSet<PageRef> = BTreeSet::new();
    for hit in &pages.hits {
        let payload = hit.payload.clone().ok_or_else(|| {
            Error::InvalidInput("hierarchical query requires page payloads on the page index".into())
        })?;
        allowed.insert(payload);
    }
    search_within_pages(chunk_index, query, &allowed, cfg.k_chunks)
}

/// Exact scan of the chunk index restricted to the given pages.
pub(crate) fn search_within_pages(
    chunk_index: &VectorIndex,
    query: &EmbeddingVector,
    allowed: &BTreeSet<PageRef>,
    k: usize,
) -> Result<RetrievalResult> {
    search_where(chunk_index, query, k, |entry| {
        let payload = entry.payload.as_ref().ok_or_else(|| {
            Error::InvalidInput("hierarchical query requires page payloads on the chunk index".into())
        })?;
        Ok(allowed.contains(payload))
    })
}

/// Exact scan of the index restricted to entries accepted by `keep`,
/// ranked by descending dot product with ties broken by ascending id.
pub fn search_where<F>(
    index: &VectorIndex,
    query: &EmbeddingVector,
    k: usize,
    mut keep: F,
) -> Result<RetrievalResult>
where
    F: FnMut(&IndexEntry) -> Result<bool>,
{
    if query.dim() != index.dim() {
        return Err(Error::DimensionMismatch { left: index.dim(), right: query.dim() });
    }
    let mut scored: Vec<(f32, usize)> = Vec::new();
    for (idx, entry) in index.entries().iter().enumerate() {
        if keep(entry)? {
            let score: f32 = query
                .as_slice()
                .iter()
                .zip(entry.vector.as_slice())
                .map(|(a, b)| a * b)
                .sum();
            scored.push((score, idx));
        }
    }
    rank_descending(&mut scored, index.entries());
    scored.truncate(k);
    Ok(RetrievalResult {
        hits: scored
            .into_iter()
            .map(|(score, idx)| {
                let entry = &index.entries()[idx];
                SearchHit { id: entry.id.clone(), score, payload: entry.payload.clone() }
            })
            .collect(),
    })
}
