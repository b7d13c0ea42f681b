//! End-to-end runs: chunk, extract, aggregate, discover, export.
//!
//! Every stage is also exposed on its own so the CLI can run them one at a
//! time with intermediate files in between; chaining the stages gives the
//! same artifacts as [`run_pipeline`].

mod config;
mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::aggregation::{aggregate_with, Aggregated};
use crate::client::{ClientConfig, ClientError, CompletionClient, HttpClient, MockClient, ENV_MODEL};
use crate::evaluation::{evaluate, EvalError, EvalReport, GoldSet};
use crate::extraction::{chunk_document, extract_chunk, pattern_extract, ExtractionResult, TextChunk};
use crate::graph::{serialize_to_vec, GraphFormat, KnowledgeGraph};
use crate::topology::{discover, DiscoveryReport, InferenceRule, SenseTable};

pub use config::{ExtractorChoice, PipelineConfig};
pub use io::{
    format_for_path, parse_corpus, read_corpus, read_graph, read_rules, read_senses, read_triples,
    triples_to_jsonl, Document,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Extract,
    Aggregate,
    Discover,
    Evaluate,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Aggregate => "aggregate",
            Stage::Discover => "discover",
            Stage::Evaluate => "evaluate",
            Stage::Export => "export",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {}{}: {reason}", file.display(), if *line > 0 { format!(":{line}") } else { String::new() })]
    Input {
        stage: Stage,
        file: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{stage}: {source}")]
    Model { stage: Stage, source: ClientError },
    #[error("{stage}: {message}")]
    Internal { stage: Stage, message: String },
}

impl PipelineError {
    /// Process exit status: 1 usage/config, 2 input parse, 3 model
    /// endpoint, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Input { .. } => 2,
            PipelineError::Model { .. } => 3,
            PipelineError::Internal { .. } => 4,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Config(_) => None,
            PipelineError::Input { stage, .. }
            | PipelineError::Model { stage, .. }
            | PipelineError::Internal { stage, .. } => Some(*stage),
        }
    }
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        let (file, line, reason) = match e {
            EvalError::Parse { file, line, reason } => (file, line, reason),
            EvalError::Graph { file, source } => (file, 0, source.to_string()),
            EvalError::Io { file, source } => (file, 0, source.to_string()),
        };
        PipelineError::Input {
            stage: Stage::Evaluate,
            file,
            line,
            reason,
        }
    }
}

fn io_error(stage: Stage, path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Internal {
        stage,
        message: format!("{}: {e}", path.display()),
    }
}

/// Builds the client for the configured extractor; `None` for the pattern
/// extractor.
pub fn build_client(config: &PipelineConfig) -> Result<Option<Box<dyn CompletionClient>>, PipelineError> {
    match config.extractor {
        ExtractorChoice::Pattern => Ok(None),
        ExtractorChoice::Fixture => {
            let path = config.fixtures.as_ref().ok_or_else(|| PipelineError::Config("missing fixtures path".into()))?;
            let client = MockClient::from_json_file(path).map_err(|e| PipelineError::Input {
                stage: Stage::Extract,
                file: path.clone(),
                line: 0,
                reason: e.to_string(),
            })?;
            Ok(Some(Box::new(client)))
        }
        ExtractorChoice::Model => {
            let client_config = ClientConfig::from_env().ok_or_else(|| PipelineError::Model {
                stage: Stage::Extract,
                source: ClientError::InvalidRequest(format!(
                    "extractor `model` needs {} to be set",
                    crate::client::ENV_API_BASE
                )),
            })?;
            let client = HttpClient::new(client_config).map_err(|source| PipelineError::Model {
                stage: Stage::Extract,
                source,
            })?;
            Ok(Some(Box::new(client)))
        }
    }
}

/// Model parameters with the model name taken from the environment when
/// set there.
pub fn effective_params(config: &PipelineConfig) -> crate::client::CompletionParams {
    let mut params = config.model.clone();
    if config.extractor == ExtractorChoice::Model {
        if let Ok(name) = std::env::var(ENV_MODEL) {
            if !name.trim().is_empty() {
                params.model_name = name;
            }
        }
    }
    params
}

pub fn chunk_corpus(docs: &[Document], max_chunk_chars: usize) -> Vec<TextChunk> {
    docs.iter()
        .flat_map(|d| chunk_document(&d.id, &d.text, max_chunk_chars))
        .collect()
}

/// Output of the extraction stage. On failure `results` holds the chunks
/// that did succeed.
pub struct ExtractionOutcome {
    pub results: Vec<ExtractionResult>,
    pub error: Option<PipelineError>,
}

/// Extracts every chunk on a pool of `worker_count` threads. Results come
/// back ordered by `(source_id, chunk_index)` whatever the scheduling.
pub fn extract_chunks(
    chunks: &[TextChunk],
    config: &PipelineConfig,
    client: Option<&dyn CompletionClient>,
) -> ExtractionOutcome {
    let params = effective_params(config);
    let run_one = |chunk: &TextChunk| -> Result<ExtractionResult, ClientError> {
        match client {
            None => {
                let r = pattern_extract(chunk);
                Ok(if config.include_context { r } else { r.without_context() })
            }
            Some(c) => extract_chunk(chunk, c, &params, config.include_context),
        }
    };

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ExtractionResult, ClientError>>>> =
        Mutex::new((0..chunks.len()).map(|_| None).collect());
    let workers = config.worker_count.min(chunks.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(chunk) = chunks.get(i) else { break };
                let outcome = run_one(chunk);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(outcome);
            });
        }
    });

    let mut results = Vec::new();
    let mut error = None;
    for slot in slots.into_inner().expect("workers finished") {
        match slot.expect("every chunk was processed") {
            Ok(r) => results.push(r),
            Err(source) => {
                if error.is_none() {
                    error = Some(PipelineError::Model {
                        stage: Stage::Extract,
                        source,
                    });
                }
            }
        }
    }
    results.sort_by(|a, b| (&a.source_id, a.chunk_index).cmp(&(&b.source_id, b.chunk_index)));
    ExtractionOutcome { results, error }
}

pub fn aggregate_results(results: &[ExtractionResult], config: &PipelineConfig) -> Aggregated<f64> {
    aggregate_with(results, &config.normalization, config.base_confidence)
}

/// Rules and senses named by the config; empty when not configured.
pub fn load_discovery_inputs(config: &PipelineConfig) -> Result<(Vec<InferenceRule<f64>>, SenseTable), PipelineError> {
    let rules = match &config.rules {
        Some(p) => read_rules(p)?,
        None => Vec::new(),
    };
    let senses = match &config.senses {
        Some(p) => read_senses(p, &config.normalization)?,
        None => SenseTable::new(),
    };
    Ok((rules, senses))
}

pub fn discover_graph(
    g: &KnowledgeGraph<f64>,
    config: &PipelineConfig,
    rules: &[InferenceRule<f64>],
    senses: &SenseTable,
) -> (KnowledgeGraph<f64>, DiscoveryReport<f64>) {
    discover(g, rules, senses, &config.topology)
}

/// Serialized graph with edges below `threshold` left out.
pub fn export_graph(g: &KnowledgeGraph<f64>, format: GraphFormat, threshold: f64) -> (Vec<u8>, usize) {
    let mut kept = g.clone();
    kept.retain_edges(|e| e.confidence >= threshold);
    let count = kept.edge_count();
    (serialize_to_vec(&kept, format), count)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Counts {
    pub documents: usize,
    pub chunks: usize,
    pub triples: usize,
    pub repaired_chunks: usize,
    pub rejected_lines: usize,
    pub rejected_triples: usize,
    pub nodes: usize,
    pub edges: usize,
    pub inferred_edges: usize,
    pub exported_edges: usize,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub counts: Counts,
    pub rejected_triples: Vec<crate::aggregation::RejectedTriple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discovery: Option<DiscoveryReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvalReport<f64>>,
    /// Wall-clock milliseconds per stage.
    pub timings_ms: BTreeMap<String, f64>,
    pub config: PipelineConfig,
}

pub const TRIPLES_FILE: &str = "triples.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ERROR_FILE: &str = "error.txt";

pub fn graph_file_name(format: GraphFormat) -> String {
    format!("graph.{}", format.extension())
}

/// Sibling directory that receives partial outputs of a failed run.
pub fn quarantine_dir(out_dir: &Path) -> PathBuf {
    let name = out_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out_dir.with_file_name(format!("{name}.quarantine"))
}

fn write_all(dir: &Path, files: &[(String, Vec<u8>)], stage: Stage) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|e| io_error(stage, dir, e))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_error(stage, &path, e))?;
    }
    Ok(())
}

fn quarantine(out_dir: &Path, mut files: Vec<(String, Vec<u8>)>, error: PipelineError) -> PipelineError {
    files.push((ERROR_FILE.into(), format!("{error}\n").into_bytes()));
    let dir = quarantine_dir(out_dir);
    if let Err(e) = write_all(&dir, &files, Stage::Export) {
        log::error!("could not write quarantine directory {}: {e}", dir.display());
    } else {
        log::warn!("partial outputs written to {}", dir.display());
    }
    error
}

fn elapsed_ms(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

/// Runs every stage over `docs` and writes `triples.jsonl`, the graph and
/// `summary.json` into `out_dir`. On failure nothing is written to
/// `out_dir`; whatever was produced goes to [`quarantine_dir`] instead.
pub fn run_documents(
    config: &PipelineConfig,
    docs: &[Document],
    client: Option<&dyn CompletionClient>,
    out_dir: &Path,
) -> Result<RunSummary, PipelineError> {
    let mut timings = BTreeMap::new();
    let mut counts = Counts {
        documents: docs.len(),
        ..Counts::default()
    };

    let start = Instant::now();
    let chunks = chunk_corpus(docs, config.max_chunk_chars);
    counts.chunks = chunks.len();
    let outcome = extract_chunks(&chunks, config, client);
    timings.insert(Stage::Extract.to_string(), elapsed_ms(start));
    let triples_bytes = triples_to_jsonl(&outcome.results).into_bytes();
    if let Some(e) = outcome.error {
        return Err(quarantine(out_dir, vec![(TRIPLES_FILE.into(), triples_bytes)], e));
    }
    let results = outcome.results;
    counts.triples = results.iter().map(|r| r.triples.len()).sum();
    counts.repaired_chunks = results.iter().filter(|r| r.repaired).count();
    counts.rejected_lines = results.iter().map(|r| r.rejected_lines.len()).sum();

    let start = Instant::now();
    let aggregated = aggregate_results(&results, config);
    timings.insert(Stage::Aggregate.to_string(), elapsed_ms(start));
    counts.rejected_triples = aggregated.rejects.len();

    let start = Instant::now();
    let (graph, discovery) = match load_discovery_inputs(config) {
        Ok((rules, senses)) => {
            let (g, report) = discover_graph(&aggregated.graph, config, &rules, &senses);
            (g, Some(report))
        }
        Err(e) => {
            let partial = serialize_to_vec(&aggregated.graph, config.export_format);
            return Err(quarantine(
                out_dir,
                vec![
                    (TRIPLES_FILE.into(), triples_bytes),
                    (graph_file_name(config.export_format), partial),
                ],
                e,
            ));
        }
    };
    timings.insert(Stage::Discover.to_string(), elapsed_ms(start));
    if let Some(err) = discovery.as_ref().and_then(|d| d.errors.first()) {
        log::warn!("discovery step `{}` failed: {}", err.step, err.message);
    }
    counts.nodes = graph.node_count();
    counts.edges = graph.edge_count();
    counts.inferred_edges = graph.edges().filter(|e| e.inferred).count();

    let evaluation = match &config.gold {
        Some(path) => {
            let start = Instant::now();
            let gold = GoldSet::load(path, &config.normalization).map_err(PipelineError::from);
            let gold = match gold {
                Ok(g) => g,
                Err(e) => {
                    let partial = serialize_to_vec(&graph, config.export_format);
                    return Err(quarantine(
                        out_dir,
                        vec![
                            (TRIPLES_FILE.into(), triples_bytes),
                            (graph_file_name(config.export_format), partial),
                        ],
                        e,
                    ));
                }
            };
            let report = evaluate(&graph, &gold, config.match_policy, false);
            timings.insert(Stage::Evaluate.to_string(), elapsed_ms(start));
            Some(report)
        }
        None => None,
    };

    let start = Instant::now();
    let (graph_bytes, exported) = export_graph(&graph, config.export_format, config.confidence_threshold);
    counts.exported_edges = exported;
    timings.insert(Stage::Export.to_string(), elapsed_ms(start));

    let summary = RunSummary {
        counts,
        rejected_triples: aggregated.rejects,
        discovery,
        evaluation,
        timings_ms: timings,
        config: config.clone(),
    };
    let summary_bytes = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    write_all(
        out_dir,
        &[
            (TRIPLES_FILE.into(), triples_bytes),
            (graph_file_name(config.export_format), graph_bytes),
            (SUMMARY_FILE.into(), summary_bytes),
        ],
        Stage::Export,
    )?;
    Ok(summary)
}

/// Reads the corpus, builds the configured client and runs every stage.
pub fn run_pipeline(config: &PipelineConfig, corpus_path: &Path, out_dir: &Path) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    config.check_files()?;
    let docs = read_corpus(corpus_path)?;
    let client = build_client(config)?;
    run_documents(config, &docs, client.as_deref(), out_dir)
}
