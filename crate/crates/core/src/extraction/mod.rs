//! Text to context-annotated triples.

mod chunk;
mod parse;
mod pattern;
mod prompt;

use serde::{Deserialize, Serialize};

use crate::client::{ClientError, CompletionClient, CompletionParams};
use crate::graph::{ContextMap, ContextTriple, ExtractorKind, Provenance};

pub use chunk::{chunk_document, TextChunk, DEFAULT_MAX_CHUNK_CHARS};
pub use parse::parse_extraction_response;
pub use pattern::pattern_extract;
pub use prompt::{build_extraction_prompt, build_repair_prompt};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedLine {
    pub fragment: String,
    pub reason: String,
}

/// Triples extracted from one chunk, with the raw text they came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub source_id: String,
    pub chunk_index: usize,
    pub triples: Vec<ContextTriple>,
    #[serde(default)]
    pub raw_response: String,
    #[serde(default)]
    pub repaired: bool,
    #[serde(default)]
    pub rejected_lines: Vec<RejectedLine>,
}

impl ExtractionResult {
    pub fn empty(source_id: &str, chunk_index: usize) -> Self {
        Self {
            source_id: source_id.to_string(),
            chunk_index,
            triples: Vec::new(),
            raw_response: String::new(),
            repaired: false,
            rejected_lines: Vec::new(),
        }
    }

    /// Drops every triple's context, as in the no-context ablation.
    pub fn without_context(mut self) -> Self {
        for t in &mut self.triples {
            t.context = ContextMap::new();
        }
        self
    }
}

/// Renders a triple in the extraction grammar.
pub fn format_triple_line(t: &ContextTriple) -> String {
    let mut line = format!("({} | {} | {})", t.subject, t.predicate, t.object);
    if !t.context.is_empty() {
        let entries: Vec<String> = t.context.pairs().map(|(k, v)| format!("{k}={v}")).collect();
        line.push_str(&format!(" {{{}}}", entries.join("; ")));
    }
    line
}

/// Prompts the model for `chunk` and parses the answer. When nothing parses
/// from a non-empty answer, the model is asked once to repair its output.
pub fn extract_chunk<C: CompletionClient + ?Sized>(
    chunk: &TextChunk,
    client: &C,
    params: &CompletionParams,
    include_context: bool,
) -> Result<ExtractionResult, ClientError> {
    let provenance = Provenance::new(&chunk.source_id, chunk.chunk_index, ExtractorKind::Model);
    let raw = client.complete(&build_extraction_prompt(chunk, include_context), params)?;
    let mut result = parse_extraction_response(&raw, provenance.clone());
    if result.triples.is_empty() && !raw.trim().is_empty() {
        let repair = build_repair_prompt(chunk, include_context, &raw);
        let repaired_raw = client.complete(&repair, params)?;
        let mut second = parse_extraction_response(&repaired_raw, provenance);
        let mut rejected = std::mem::take(&mut result.rejected_lines);
        rejected.append(&mut second.rejected_lines);
        second.rejected_lines = rejected;
        second.repaired = true;
        result = second;
    }
    Ok(if include_context {
        result
    } else {
        result.without_context()
    })
}
