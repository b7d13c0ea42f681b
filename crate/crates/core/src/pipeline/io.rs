//! Line-oriented inputs and the small JSON side files.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Stage};
use crate::aggregation::{normalize_label, NormalizationPolicy};
use crate::extraction::ExtractionResult;
use crate::graph::{deserialize_graph, GraphFormat, KnowledgeGraph};
use crate::topology::{InferenceRule, SenseSignature, SenseTable};

/// One corpus line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    pub text: String,
}

fn read_text(stage: Stage, path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::Input {
        stage,
        file: path.to_path_buf(),
        line: 0,
        reason: e.to_string(),
    })
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(stage: Stage, path: &Path, text: &str) -> Result<Vec<T>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| PipelineError::Input {
            stage,
            file: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Parses corpus JSONL. Document ids must be unique and non-empty.
pub fn parse_corpus(path: &Path, text: &str) -> Result<Vec<Document>, PipelineError> {
    let docs: Vec<Document> = parse_jsonl(Stage::Ingest, path, text)?;
    let mut seen = BTreeSet::new();
    for (i, doc) in docs.iter().enumerate() {
        if doc.id.trim().is_empty() || !seen.insert(doc.id.as_str()) {
            let line = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .nth(i)
                .map_or(0, |(n, _)| n + 1);
            return Err(PipelineError::Input {
                stage: Stage::Ingest,
                file: path.to_path_buf(),
                line,
                reason: format!("empty or duplicate document id `{}`", doc.id),
            });
        }
    }
    Ok(docs)
}

pub fn read_corpus(path: &Path) -> Result<Vec<Document>, PipelineError> {
    parse_corpus(path, &read_text(Stage::Ingest, path)?)
}

/// One [`ExtractionResult`] per line.
pub fn triples_to_jsonl(results: &[ExtractionResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("extraction results serialize"));
        out.push('\n');
    }
    out
}

pub fn read_triples(path: &Path) -> Result<Vec<ExtractionResult>, PipelineError> {
    parse_jsonl(Stage::Aggregate, path, &read_text(Stage::Aggregate, path)?)
}

fn json_file<T: for<'de> Deserialize<'de>>(stage: Stage, path: &Path) -> Result<T, PipelineError> {
    let text = read_text(stage, path)?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Input {
        stage,
        file: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })
}

pub fn read_rules(path: &Path) -> Result<Vec<InferenceRule<f64>>, PipelineError> {
    json_file(Stage::Discover, path)
}

/// Reads a senses file, normalizing the node labels used as keys.
pub fn read_senses(path: &Path, policy: &NormalizationPolicy) -> Result<SenseTable, PipelineError> {
    let raw: std::collections::BTreeMap<String, Vec<SenseSignature>> = json_file(Stage::Discover, path)?;
    let mut table = SenseTable::new();
    for (label, senses) in raw {
        let key = normalize_label(&label, policy).map_err(|e| PipelineError::Input {
            stage: Stage::Discover,
            file: path.to_path_buf(),
            line: 0,
            reason: e.to_string(),
        })?;
        table.entry(key).or_default().extend(senses);
    }
    Ok(table)
}

/// Graph format implied by a file name; JSON unless it ends in `.graphml`.
pub fn format_for_path(path: &Path) -> GraphFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("graphml") => GraphFormat::GraphMl,
        _ => GraphFormat::Json,
    }
}

pub fn read_graph(stage: Stage, path: &Path) -> Result<KnowledgeGraph<f64>, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::Input {
        stage,
        file: path.to_path_buf(),
        line: 0,
        reason: e.to_string(),
    })?;
    deserialize_graph(&bytes, format_for_path(path)).map_err(|e| PipelineError::Input {
        stage,
        file: path.to_path_buf(),
        line: 0,
        reason: e.to_string(),
    })
}
