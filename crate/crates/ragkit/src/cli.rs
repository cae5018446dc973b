//! Command-line interface: one subcommand per pipeline stage plus `query`
//! and `serve`.
//!
//! Commands compose into the full corpus pipeline
//! (`clean → dedup → ingest → embed → index → tag → query`) with
//! deterministic artifacts at every step. Exit codes: 0 on success, 1 on a
//! domain error (structured JSON on standard error), 2 on a usage error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::clean::{run_pipeline, CleanConfig, LexiconLangScorer};
use crate::config::{EmbedderSelection, EngineConfig};
use crate::corpus::{read_jsonl, write_jsonl, Chunk, CorpusManifest, DimensionTag, RawDocument};
use crate::dedup::{dedup_corpus, DedupConfig};
use crate::dimensions::{tag_corpus, LexiconTagger, ServiceTagger, TagConfig, Tagger};
use crate::embed::{embed_corpus, CorpusVectors, EmbedConfig, Embedder};
use crate::engine::{QueryEngine, QueryRequest};
use crate::error::{Error, Result};
use crate::evalkit::{
    compare_modes, recall_at_k, recall_at_k_hierarchical, EvalCase, ModeComparison, QueryMode,
};
use crate::ground::{ground_example, GroundingConfig, IftExample};
use crate::index::{IndexEntry, IndexMode, PageRef, VectorIndex};
use crate::ingest::{ingest_corpus, IngestConfig, PageOverrides, PageRecord, WhitespaceTokenizer};
use crate::prompt::{render_chatml, PromptBundle};
use crate::select::{
    corpus_stats, ec_select, em_filter, read_bitext_tsv, read_seed_lines, read_terms_tsv,
    ECConfig,
};
use crate::service;

/// Parses arguments, runs the selected command, and returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!(
                "{}",
                json!({ "error": { "code": err.code(), "message": err.to_string() } })
            );
            1
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ragkit",
    version,
    about = "Build, query, and evaluate a retrieval-grounded text corpus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize, redact, and quality-filter raw documents.
    Clean(CleanArgs),
    /// Drop exact-origin and near-duplicate documents.
    Dedup(DedupArgs),
    /// Group page records into documents and cut token-window chunks.
    Ingest(IngestArgs),
    /// Embed kept pages and chunks with the selected backend.
    Embed(EmbedCmdArgs),
    /// Build page and chunk vector indexes from stored vectors.
    Index(IndexArgs),
    /// Tag chunks with natural/economic/social dimension labels.
    Tag(TagArgs),
    /// Select reference and distractor chunks for IFT examples.
    Ground(GroundArgs),
    /// Prompt assembly utilities.
    #[command(subcommand)]
    Prompt(PromptCommand),
    /// In-domain bitext selection.
    #[command(subcommand)]
    Select(SelectCommand),
    /// Retrieval evaluation harness.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run one retrieval query against a built corpus.
    Query(QueryArgs),
    /// Serve read-only retrieval over HTTP.
    Serve(ServeArgs),
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Clean(args) => cmd_clean(args),
        Command::Dedup(args) => cmd_dedup(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Index(args) => cmd_index(args),
        Command::Tag(args) => cmd_tag(args),
        Command::Ground(args) => cmd_ground(args),
        Command::Prompt(command) => cmd_prompt(command),
        Command::Select(command) => cmd_select(command),
        Command::Eval(command) => cmd_eval(command),
        Command::Query(args) => cmd_query(args),
        Command::Serve(args) => cmd_serve(args),
    }
}

/// Embedding backend flags shared by embedding-dependent commands.
#[derive(Debug, Args)]
struct EmbedderArgs {
    /// Embedding backend.
    #[arg(long, value_enum, default_value_t = EmbedderKind::Hash)]
    embedder: EmbedderKind,
    /// Vector dimensionality.
    #[arg(long, default_value_t = 64)]
    embed_dim: usize,
    /// Seed for the hash embedder's vector family.
    #[arg(long, default_value_t = 42)]
    embed_seed: u64,
    /// Remote embedding endpoint (remote backend only).
    #[arg(long)]
    endpoint: Option<String>,
    /// Environment variable holding the remote bearer token.
    #[arg(long)]
    token_env: Option<String>,
    /// Maximum tokens per remote request.
    #[arg(long, default_value_t = 512)]
    max_seq_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbedderKind {
    Hash,
    Remote,
}

impl EmbedderArgs {
    fn selection(&self) -> Result<EmbedderSelection> {
        match self.embedder {
            EmbedderKind::Hash => {
                Ok(EmbedderSelection::Hash { dim: self.embed_dim, seed: self.embed_seed })
            }
            EmbedderKind::Remote => {
                let endpoint = self.endpoint.clone().ok_or_else(|| {
                    Error::InvalidInput("--endpoint is required with --embedder remote".into())
                })?;
                Ok(EmbedderSelection::Remote {
                    endpoint,
                    dim: self.embed_dim,
                    max_seq_len: self.max_seq_len,
                    auth_token_env: self.token_env.clone(),
                })
            }
        }
    }

    fn build(&self) -> Result<Box<dyn Embedder + Send + Sync>> {
        let mut cfg = EngineConfig::default();
        cfg.embedder = self.selection()?;
        cfg.build_embedder()
    }
}

#[derive(Debug, Args)]
struct CleanArgs {
    /// Raw documents JSONL.
    #[arg(long)]
    input: PathBuf,
    /// Output JSONL of kept, cleaned documents.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-document report JSONL.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Optional engine config supplying cleaning thresholds.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_clean(args: CleanArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => EngineConfig::load(path)?.clean,
        None => CleanConfig::default(),
    };
    let docs: Vec<RawDocument> = read_jsonl(&args.input)?;
    let (kept, reports) = run_pipeline(&docs, &cfg, &LexiconLangScorer);
    write_jsonl(&args.out, &kept)?;
    if let Some(report) = &args.report {
        write_jsonl(report, &reports)?;
    }
    println!(
        "{}",
        json!({ "input": docs.len(), "kept": kept.len(), "rejected": docs.len() - kept.len() })
    );
    Ok(())
}

#[derive(Debug, Args)]
struct DedupArgs {
    /// Cleaned documents JSONL.
    #[arg(long)]
    input: PathBuf,
    /// Output JSONL of surviving documents.
    #[arg(long)]
    out: PathBuf,
    /// Optional duplicate-pair report JSONL.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Jaccard-estimate threshold above which the later document drops.
    #[arg(long, default_value_t = 0.80)]
    threshold: f64,
    /// Number of MinHash permutations.
    #[arg(long, default_value_t = 128)]
    permutations: usize,
    /// Words per shingle.
    #[arg(long, default_value_t = 5)]
    shingle_size: usize,
    /// Seed for the permutation keys.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn cmd_dedup(args: DedupArgs) -> Result<()> {
    let cfg = DedupConfig {
        num_permutations: args.permutations,
        shingle_size: args.shingle_size,
        threshold: args.threshold,
        seed: args.seed,
    };
    let docs: Vec<RawDocument> = read_jsonl(&args.input)?;
    let (kept, pairs) = dedup_corpus(&docs, &cfg);
    write_jsonl(&args.out, &kept)?;
    if let Some(report) = &args.report {
        write_jsonl(report, &pairs)?;
    }
    println!(
        "{}",
        json!({ "input": docs.len(), "kept": kept.len(), "dropped": pairs.len() })
    );
    Ok(())
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Page records JSONL (`doc_id`, `page_no`, `text`, ...).
    #[arg(long)]
    input: PathBuf,
    /// Corpus output directory (`manifest.json` + `chunks.jsonl`).
    #[arg(long)]
    out: PathBuf,
    /// Tokens per chunk window.
    #[arg(long, default_value_t = 115)]
    chunk_length: usize,
    /// Tokens shared between consecutive windows.
    #[arg(long, default_value_t = 10)]
    chunk_overlap: usize,
    /// `doc_id/page_no` keys to keep despite heuristic rejection.
    #[arg(long)]
    keep: Vec<String>,
    /// `doc_id/page_no` keys to drop regardless of heuristics.
    #[arg(long)]
    drop: Vec<String>,
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let records: Vec<PageRecord> = read_jsonl(&args.input)?;
    let cfg = IngestConfig { chunk_length: args.chunk_length, chunk_overlap: args.chunk_overlap };
    let overrides = PageOverrides { keep: args.keep, drop: args.drop };
    let manifest = ingest_corpus(&records, &WhitespaceTokenizer, &cfg, &overrides)?;
    manifest.save(&args.out)?;
    let pages: usize = manifest.documents.iter().map(|d| d.pages.len()).sum();
    let kept: usize = manifest
        .documents
        .iter()
        .map(|d| d.pages.iter().filter(|p| p.kept).count())
        .sum();
    println!(
        "{}",
        json!({
            "documents": manifest.documents.len(),
            "pages": pages,
            "pages_kept": kept,
            "chunks": manifest.chunks.len(),
        })
    );
    Ok(())
}

#[derive(Debug, Args)]
struct EmbedCmdArgs {
    /// Corpus directory produced by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for `pages.jsonl` and `chunks.jsonl` vectors.
    #[arg(long)]
    out: PathBuf,
    /// Tokens per page-embedding window.
    #[arg(long, default_value_t = 512)]
    window: usize,
    /// Stride between page-embedding windows.
    #[arg(long, default_value_t = 256)]
    step: usize,
    #[command(flatten)]
    backend: EmbedderArgs,
}

fn cmd_embed(args: EmbedCmdArgs) -> Result<()> {
    let manifest = CorpusManifest::load(&args.corpus)?;
    let embedder = args.backend.build()?;
    let cfg = EmbedConfig { window: args.window, step: args.step };
    let vectors = embed_corpus(&manifest, &WhitespaceTokenizer, embedder.as_ref(), &cfg)?;
    vectors.save(&args.out)?;
    println!(
        "{}",
        json!({
            "pages": vectors.pages.len(),
            "chunks": vectors.chunks.len(),
            "dim": embedder.dim(),
        })
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IndexModeArg {
    Exact,
    Partitioned,
}

#[derive(Debug, Args)]
struct IndexArgs {
    /// Vectors directory produced by `embed`.
    #[arg(long)]
    vectors: PathBuf,
    /// Index output directory (`pages/` and `chunks/` subdirectories).
    #[arg(long)]
    out: PathBuf,
    /// Search mode for both indexes.
    #[arg(long, value_enum, default_value_t = IndexModeArg::Exact)]
    mode: IndexModeArg,
    /// Partition count for partitioned mode (default: square root of N).
    #[arg(long)]
    partitions: Option<usize>,
    /// Seed for partition clustering.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn page_ref_from_key(key: &str) -> Result<PageRef> {
    let malformed = || Error::InvalidInput(format!("malformed page key: {key}"));
    let (doc_id, page) = key.rsplit_once('/').ok_or_else(malformed)?;
    let page_no: u32 = page.parse().map_err(|_| malformed())?;
    Ok(PageRef { doc_id: doc_id.to_string(), page_no })
}

fn page_ref_from_chunk_id(chunk_id: &str) -> Result<PageRef> {
    let (page_key, _token_start) = chunk_id.rsplit_once('/').ok_or_else(|| {
        Error::InvalidInput(format!("malformed chunk id: {chunk_id}"))
    })?;
    page_ref_from_key(page_key)
}

fn cmd_index(args: IndexArgs) -> Result<()> {
    let vectors = CorpusVectors::load(&args.vectors)?;
    let mode = match args.mode {
        IndexModeArg::Exact => IndexMode::Exact,
        IndexModeArg::Partitioned => IndexMode::Partitioned,
    };

    let mut page_entries = Vec::with_capacity(vectors.pages.len());
    for (key, vector) in &vectors.pages {
        page_entries.push(IndexEntry {
            id: key.clone(),
            vector: vector.clone(),
            payload: Some(page_ref_from_key(key)?),
        });
    }
    let mut chunk_entries = Vec::with_capacity(vectors.chunks.len());
    for (chunk_id, vector) in &vectors.chunks {
        chunk_entries.push(IndexEntry {
            id: chunk_id.clone(),
            vector: vector.clone(),
            payload: Some(page_ref_from_chunk_id(chunk_id)?),
        });
    }

    let page_index = VectorIndex::build(page_entries, mode, args.partitions, args.seed)?;
    let chunk_index = VectorIndex::build(chunk_entries, mode, args.partitions, args.seed)?;
    page_index.save(&args.out.join("pages"))?;
    chunk_index.save(&args.out.join("chunks"))?;
    println!(
        "{}",
        json!({
            "pages": page_index.len(),
            "chunks": chunk_index.len(),
            "dim": chunk_index.dim(),
            "page_partitions": page_index.partition_count(),
            "chunk_partitions": chunk_index.partition_count(),
        })
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaggerKind {
    Lexicon,
    Service,
}

#[derive(Debug, Args)]
struct TagArgs {
    /// Corpus directory produced by `ingest`; updated in place.
    #[arg(long)]
    corpus: PathBuf,
    /// Tagging backend.
    #[arg(long, value_enum, default_value_t = TaggerKind::Lexicon)]
    tagger: TaggerKind,
    /// Lexicon JSON overriding the built-in keyword lists.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Chat-completion endpoint (service backend only).
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent to the tagging service.
    #[arg(long, default_value = "gpt-3.5-turbo")]
    model: String,
    /// Environment variable holding the service bearer token.
    #[arg(long)]
    token_env: Option<String>,
    /// Audit-record output JSONL (default: `<corpus>/tags.jsonl`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Retries after a failed tagger call.
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
}

fn cmd_tag(args: TagArgs) -> Result<()> {
    let mut manifest = CorpusManifest::load(&args.corpus)?;
    let tagger: Box<dyn Tagger> = match args.tagger {
        TaggerKind::Lexicon => Box::new(match &args.lexicon {
            Some(path) => LexiconTagger::from_path(path)?,
            None => LexiconTagger::default(),
        }),
        TaggerKind::Service => {
            let endpoint = args.endpoint.clone().ok_or_else(|| {
                Error::InvalidInput("--endpoint is required with --tagger service".into())
            })?;
            let mut tagger = ServiceTagger::new(endpoint, args.model.clone());
            if let Some(var) = &args.token_env {
                let token = std::env::var(var).map_err(|_| {
                    Error::InvalidInput(format!(
                        "environment variable {var} for the tagging token is not set"
                    ))
                })?;
                tagger = tagger.with_auth_token(token);
            }
            Box::new(tagger)
        }
    };
    let records =
        tag_corpus(&mut manifest, tagger.as_ref(), &TagConfig { max_retries: args.max_retries });
    manifest.save(&args.corpus)?;
    let out = args.out.clone().unwrap_or_else(|| args.corpus.join("tags.jsonl"));
    write_jsonl(&out, &records)?;
    let tagged = records.iter().filter(|r| !r.tags.is_empty()).count();
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{}",
        json!({ "chunks": records.len(), "tagged": tagged, "failed": failed })
    );
    Ok(())
}

#[derive(Debug, Args)]
struct GroundArgs {
    /// Instruction-tuning examples JSONL (`prompt`, `completion`, ...).
    #[arg(long)]
    ift: PathBuf,
    /// Candidate/distractor chunk pool JSONL.
    #[arg(long)]
    pool: PathBuf,
    /// Output grounded examples JSONL.
    #[arg(long)]
    out: PathBuf,
    /// Prefix context chunks with citation tokens.
    #[arg(long)]
    citations: bool,
    /// Number of distractor chunks per example.
    #[arg(long, default_value_t = 4)]
    distractors: usize,
    #[command(flatten)]
    backend: EmbedderArgs,
}

fn cmd_ground(args: GroundArgs) -> Result<()> {
    let examples: Vec<IftExample> = read_jsonl(&args.ift)?;
    let pool: Vec<Chunk> = read_jsonl(&args.pool)?;
    let embedder = args.backend.build()?;
    let cfg = GroundingConfig { n_distractors: args.distractors, ..GroundingConfig::default() };
    cfg.validate()?;
    let mut grounded = Vec::with_capacity(examples.len());
    for example in &examples {
        grounded.push(ground_example(
            example,
            &pool,
            &pool,
            embedder.as_ref(),
            &cfg,
            args.citations,
        )?);
    }
    write_jsonl(&args.out, &grounded)?;
    let with_reference = grounded.iter().filter(|g| g.reference_chunk_id.is_some()).count();
    println!(
        "{}",
        json!({ "examples": grounded.len(), "with_reference": with_reference })
    );
    Ok(())
}

#[derive(Debug, Subcommand)]
enum PromptCommand {
    /// Render a bundle JSON file to the ChatML format on stdout.
    Render {
        /// Bundle JSON (`system`, `context_chunks`, `user`, `with_citations`).
        #[arg(long)]
        bundle: PathBuf,
    },
}

fn cmd_prompt(command: PromptCommand) -> Result<()> {
    match command {
        PromptCommand::Render { bundle } => {
            let raw = std::fs::read_to_string(&bundle).map_err(|e| Error::io(&bundle, e))?;
            let bundle: PromptBundle = serde_json::from_str(&raw)?;
            bundle.validate()?;
            print!("{}", render_chatml(&bundle));
            Ok(())
        }
    }
}

#[derive(Debug, Subcommand)]
enum SelectCommand {
    /// Keep pairs whose source side contains a glossary term.
    Em {
        /// Tab-separated `src<TAB>tgt` bitext.
        #[arg(long)]
        bitext: PathBuf,
        /// Tab-separated two-column glossary.
        #[arg(long)]
        terms: PathBuf,
        /// Output TSV of selected pairs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep pairs from clusters where seed in-domain texts land.
    Ec {
        /// Tab-separated `src<TAB>tgt` bitext.
        #[arg(long)]
        bitext: PathBuf,
        /// Seed in-domain texts, one per line.
        #[arg(long)]
        seed_texts: PathBuf,
        /// Number of clusters.
        #[arg(long, default_value_t = 8)]
        k: usize,
        /// Minimum seed share for a cluster to be selected.
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
        /// Clustering seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output TSV of selected pairs.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        backend: EmbedderArgs,
    },
}

fn write_pairs_tsv(path: &Path, pairs: &[crate::select::BitextPair]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut body = String::new();
    for pair in pairs {
        body.push_str(&pair.src);
        body.push('\t');
        body.push_str(&pair.tgt);
        body.push('\n');
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn cmd_select(command: SelectCommand) -> Result<()> {
    match command {
        SelectCommand::Em { bitext, terms, out } => {
            let pairs = read_bitext_tsv(&bitext)?;
            let terms = read_terms_tsv(&terms)?;
            let selected = em_filter(&pairs, &terms);
            if let Some(out) = &out {
                write_pairs_tsv(out, &selected)?;
            }
            let stats = corpus_stats(selected.iter().map(|p| p.src.as_str()));
            println!(
                "{}",
                json!({
                    "pairs": pairs.len(),
                    "selected": selected.len(),
                    "terms": terms.len(),
                    "selected_source_stats": stats,
                })
            );
            Ok(())
        }
        SelectCommand::Ec { bitext, seed_texts, k, tau, seed, out, backend } => {
            let pairs = read_bitext_tsv(&bitext)?;
            let seeds = read_seed_lines(&seed_texts)?;
            let embedder = backend.build()?;
            let cfg = ECConfig { k_clusters: k, tau, seed, ..ECConfig::default() };
            let selection = ec_select(&pairs, &seeds, embedder.as_ref(), &cfg)?;
            if let Some(out) = &out {
                write_pairs_tsv(out, &selection.selected_pairs)?;
            }
            let stats = corpus_stats(selection.selected_pairs.iter().map(|p| p.src.as_str()));
            println!(
                "{}",
                json!({
                    "pairs": pairs.len(),
                    "seeds": seeds.len(),
                    "selected": selection.selected_pairs.len(),
                    "selected_clusters": selection.selected_clusters,
                    "seed_shares": selection.seed_shares,
                    "selected_source_stats": stats,
                })
            );
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalModeArg {
    Question,
    Answer,
    Both,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Recall@k of gold chunks over a built index.
    Retrieval {
        /// Evaluation cases JSONL (`question`, `answer`, `gold_chunk_id`).
        #[arg(long)]
        cases: PathBuf,
        /// Index directory produced by `index`.
        #[arg(long)]
        index: PathBuf,
        /// Query mode.
        #[arg(long, value_enum, default_value_t = EvalModeArg::Both)]
        mode: EvalModeArg,
        /// Recall cutoffs.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 5])]
        ks: Vec<usize>,
        /// Evaluate through hierarchical retrieval instead of a flat scan.
        #[arg(long)]
        hierarchical: bool,
        /// Pages admitted per query in hierarchical mode.
        #[arg(long, default_value_t = 60)]
        k_pages: usize,
        #[command(flatten)]
        backend: EmbedderArgs,
    },
}

fn cmd_eval(command: EvalCommand) -> Result<()> {
    match command {
        EvalCommand::Retrieval { cases, index, mode, ks, hierarchical, k_pages, backend } => {
            let cases: Vec<EvalCase> = read_jsonl(&cases)?;
            let chunk_index = VectorIndex::load(&index.join("chunks"))?;
            let embedder = backend.build()?;

            let report_for = |query_mode: QueryMode| -> Result<crate::evalkit::EvalReport> {
                if hierarchical {
                    let page_index = VectorIndex::load(&index.join("pages"))?;
                    let cfg = crate::index::RetrievalConfig {
                        k_pages,
                        ..crate::index::RetrievalConfig::default()
                    };
                    recall_at_k_hierarchical(
                        &cases,
                        &page_index,
                        &chunk_index,
                        embedder.as_ref(),
                        query_mode,
                        &ks,
                        &cfg,
                    )
                } else {
                    recall_at_k(&cases, &chunk_index, embedder.as_ref(), query_mode, &ks)
                }
            };

            let report = match mode {
                EvalModeArg::Question => serde_json::to_value(report_for(QueryMode::Question)?)?,
                EvalModeArg::Answer => serde_json::to_value(report_for(QueryMode::Answer)?)?,
                EvalModeArg::Both => {
                    if hierarchical {
                        let question = report_for(QueryMode::Question)?;
                        let answer = report_for(QueryMode::Answer)?;
                        let delta = question
                            .recall_at
                            .iter()
                            .map(|(&k, &q)| (k, answer.recall_at[&k] - q))
                            .collect();
                        serde_json::to_value(ModeComparison { question, answer, delta })?
                    } else {
                        serde_json::to_value(compare_modes(
                            &cases,
                            &chunk_index,
                            embedder.as_ref(),
                            &ks,
                        )?)?
                    }
                }
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// Engine config JSON; explicit paths below override its path section.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory (required without --config).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Index directory with `pages/` and `chunks/` (required without --config).
    #[arg(long)]
    index: Option<PathBuf>,
    /// Query text.
    #[arg(long)]
    text: String,
    /// Restrict results to one dimension (natural, economic, social).
    #[arg(long)]
    dim: Option<String>,
    /// Override the configured page depth.
    #[arg(long)]
    k_pages: Option<usize>,
    /// Override the configured chunk count.
    #[arg(long)]
    k_chunks: Option<usize>,
    /// Override the configured probe count.
    #[arg(long)]
    probes: Option<usize>,
    /// Prefix context chunks with citation tokens.
    #[arg(long)]
    citations: bool,
    /// System-prompt subset name.
    #[arg(long)]
    subset: Option<String>,
    #[command(flatten)]
    backend: EmbedderArgs,
}

fn parse_dimension(raw: &str) -> Result<DimensionTag> {
    DimensionTag::parse(raw).ok_or_else(|| {
        Error::InvalidInput(format!(
            "unknown dimension: {raw} (expected natural, economic, or social)"
        ))
    })
}

fn engine_config_from_args(
    config: &Option<PathBuf>,
    corpus: &Option<PathBuf>,
    index: &Option<PathBuf>,
    backend: &EmbedderArgs,
) -> Result<EngineConfig> {
    let mut cfg = match config {
        Some(path) => EngineConfig::load(path)?,
        None => {
            let mut cfg = EngineConfig::default();
            cfg.embedder = backend.selection()?;
            cfg
        }
    };
    if let Some(corpus) = corpus {
        cfg.paths.corpus_dir = corpus.clone();
    }
    if let Some(index) = index {
        cfg.paths.page_index_dir = index.join("pages");
        cfg.paths.chunk_index_dir = index.join("chunks");
    }
    if config.is_none() && (corpus.is_none() || index.is_none()) {
        return Err(Error::InvalidInput(
            "provide --config or both --corpus and --index".into(),
        ));
    }
    Ok(cfg)
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let cfg = engine_config_from_args(&args.config, &args.corpus, &args.index, &args.backend)?;
    let engine = QueryEngine::load(&cfg)?;
    let request = QueryRequest {
        text: args.text.clone(),
        dimension: args.dim.as_deref().map(parse_dimension).transpose()?,
        k_pages: args.k_pages,
        k_chunks: args.k_chunks,
        probes: args.probes,
        with_citations: args.citations,
        subset: args.subset.clone(),
    };
    let outcome = engine.query(&request)?;
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(())
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Engine config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured bind address.
    #[arg(long)]
    bind: Option<String>,
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let mut cfg = EngineConfig::load(&args.config)?;
    if let Some(bind) = args.bind {
        cfg.service.bind = bind;
    }
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::InvalidInput(format!("failed to start async runtime: {e}")))?;
    runtime.block_on(service::serve(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_parses_every_subcommand() {
        Cli::try_parse_from(["ragkit", "clean", "--input", "a.jsonl", "--out", "b.jsonl"]).unwrap();
        Cli::try_parse_from(["ragkit", "dedup", "--input", "a", "--out", "b", "--threshold", "0.9"])
            .unwrap();
        Cli::try_parse_from(["ragkit", "ingest", "--input", "a", "--out", "c"]).unwrap();
        Cli::try_parse_from(["ragkit", "embed", "--corpus", "c", "--out", "v"]).unwrap();
        Cli::try_parse_from(["ragkit", "index", "--vectors", "v", "--out", "i", "--mode", "partitioned"])
            .unwrap();
        Cli::try_parse_from(["ragkit", "tag", "--corpus", "c", "--tagger", "lexicon"]).unwrap();
        Cli::try_parse_from(["ragkit", "ground", "--ift", "i", "--pool", "p", "--out", "g"])
            .unwrap();
        Cli::try_parse_from(["ragkit", "prompt", "render", "--bundle", "b.json"]).unwrap();
        Cli::try_parse_from(["ragkit", "select", "em", "--bitext", "b", "--terms", "t"]).unwrap();
        Cli::try_parse_from([
            "ragkit", "select", "ec", "--bitext", "b", "--seed-texts", "s", "--k", "4",
        ])
        .unwrap();
        Cli::try_parse_from(["ragkit", "eval", "retrieval", "--cases", "c", "--index", "i"])
            .unwrap();
        Cli::try_parse_from(["ragkit", "query", "--text", "hi", "--corpus", "c", "--index", "i"])
            .unwrap();
        Cli::try_parse_from(["ragkit", "serve", "--config", "e.json"]).unwrap();
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        let err = Cli::try_parse_from(["ragkit", "clean", "--nope", "x"]).unwrap_err();
        assert!(err.use_stderr());
    }

    #[test]
    fn dimension_names_parse_and_reject() {
        assert_eq!(parse_dimension("natural").unwrap(), DimensionTag::Natural);
        assert!(parse_dimension("weather").is_err());
    }

    #[test]
    fn page_refs_parse_from_keys_and_chunk_ids() {
        let page = page_ref_from_key("doc-a/12").unwrap();
        assert_eq!(page, PageRef { doc_id: "doc-a".into(), page_no: 12 });
        let from_chunk = page_ref_from_chunk_id("doc-a/12/230").unwrap();
        assert_eq!(from_chunk, page);
        assert!(page_ref_from_key("no-slash").is_err());
        assert!(page_ref_from_key("doc/notanumber").is_err());
    }

    #[test]
    fn remote_backend_requires_endpoint() {
        let cli = Cli::try_parse_from([
            "ragkit", "embed", "--corpus", "c", "--out", "v", "--embedder", "remote",
        ])
        .unwrap();
        let Command::Embed(args) = cli.command else { panic!("wrong command") };
        assert!(args.backend.selection().is_err());
    }
}
