use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{Edge, GraphError, KnowledgeGraph, Node};
use crate::scalar::Scalar;

#[derive(Serialize)]
#[serde(bound = "S: Scalar")]
struct GraphOut<'a, S> {
    nodes: Vec<&'a Node>,
    edges: Vec<&'a Edge<S>>,
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar")]
struct GraphIn<S> {
    nodes: Vec<Node>,
    edges: Vec<Edge<S>>,
}

pub(super) fn write<S: Scalar, W: Write>(g: &KnowledgeGraph<S>, writer: W) -> io::Result<()> {
    let out = GraphOut {
        nodes: g.nodes().collect(),
        edges: g.edges().collect(),
    };
    serde_json::to_writer(writer, &out).map_err(io::Error::from)
}

pub(super) fn read<S: Scalar>(bytes: &[u8]) -> Result<KnowledgeGraph<S>, GraphError> {
    let parsed: GraphIn<S> = serde_json::from_slice(bytes).map_err(|e| GraphError::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        reason: e.to_string(),
    })?;
    Ok(KnowledgeGraph::from_parts(parsed.nodes, parsed.edges)?)
}

/// Converts serde_json's 1-based line / column position into a byte offset.
pub(crate) fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let line_start = if line <= 1 {
        0
    } else {
        bytes
            .iter()
            .enumerate()
            .filter(|(_, b)| **b == b'\n')
            .nth(line - 2)
            .map_or(bytes.len(), |(i, _)| i + 1)
    };
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_of_second_line() {
        let text = b"{\n  \"a\": x\n}";
        let err = serde_json::from_slice::<serde_json::Value>(text).unwrap_err();
        assert_eq!(text[byte_offset(text, err.line(), err.column())], b'x');
    }
}
