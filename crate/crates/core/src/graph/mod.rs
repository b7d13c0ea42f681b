//! Shared property graph model: nodes with attribute multimaps, directed
//! edges carrying context, confidence and provenance, plus JSON and GraphML
//! serialization.

mod context;
mod graphml;
mod json;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scalar::Scalar;

pub use context::{canonical_key, ContextError, ContextMap};

/// Which stage produced a piece of evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorKind {
    Model,
    Pattern,
    Inferred,
}

/// Where an assertion came from.
///
/// Inferred edges record the rule that fired and the witnessing path as
/// the ordered list of edge ids it matched.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub chunk_index: usize,
    pub extractor: ExtractorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<EdgeId>,
}

impl Provenance {
    pub fn new(source_id: impl Into<String>, chunk_index: usize, extractor: ExtractorKind) -> Self {
        Self {
            source_id: source_id.into(),
            chunk_index,
            extractor,
            rule: None,
            witness: Vec::new(),
        }
    }

    /// Provenance for an edge derived by a rule from the given path.
    pub fn inferred(rule: &str, witness: Vec<EdgeId>) -> Self {
        Self {
            source_id: format!("rule:{rule}"),
            chunk_index: 0,
            extractor: ExtractorKind::Inferred,
            rule: Some(rule.to_string()),
            witness,
        }
    }
}

/// A raw extracted assertion with its context and origin. Surface strings
/// are trimmed but not yet normalized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    #[serde(default)]
    pub context: ContextMap,
    pub provenance: Provenance,
}

impl ContextTriple {
    /// Builds a triple from trimmed surface strings. Returns `None` if any
    /// part is empty after trimming.
    pub fn new(
        subject: &str,
        predicate: &str,
        object: &str,
        context: ContextMap,
        provenance: Provenance,
    ) -> Option<Self> {
        let (s, p, o) = (subject.trim(), predicate.trim(), object.trim());
        if s.is_empty() || p.is_empty() || o.is_empty() {
            return None;
        }
        Some(Self {
            subject: s.to_string(),
            predicate: p.to_string(),
            object: o.to_string(),
            context,
            provenance,
        })
    }
}

/// Content hash of `(source, predicate, target)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(String);

impl EdgeId {
    pub fn for_triple(source: &str, predicate: &str, target: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(source.as_bytes());
        hasher.update([0x1f]);
        hasher.update(predicate.as_bytes());
        hasher.update([0x1f]);
        hasher.update(target.as_bytes());
        let digest = hasher.finalize();
        EdgeId(hex::encode(&digest[..12]))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EdgeId {
    fn from(s: &str) -> Self {
        EdgeId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    #[serde(default)]
    pub attributes: ContextMap,
}

impl Node {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            attributes: ContextMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Edge<S> {
    pub id: EdgeId,
    pub source: String,
    pub target: String,
    pub predicate: String,
    #[serde(default)]
    pub context: ContextMap,
    pub confidence: S,
    #[serde(default)]
    pub inferred: bool,
    #[serde(default)]
    pub provenance: Vec<Provenance>,
}

impl<S: Scalar> Edge<S> {
    /// New edge with an id derived from its endpoints and predicate.
    pub fn new(
        source: impl Into<String>,
        predicate: impl Into<String>,
        target: impl Into<String>,
        confidence: S,
    ) -> Self {
        let (source, predicate, target) = (source.into(), predicate.into(), target.into());
        Self {
            id: EdgeId::for_triple(&source, &predicate, &target),
            source,
            target,
            predicate,
            context: ContextMap::new(),
            confidence,
            inferred: false,
            provenance: Vec::new(),
        }
    }

    pub fn with_context(mut self, context: ContextMap) -> Self {
        self.context = context;
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance.push(provenance);
        self
    }

    pub fn triple(&self) -> (&str, &str, &str) {
        (&self.source, &self.predicate, &self.target)
    }

    /// Folds another observation of the same edge into this one.
    fn absorb(&mut self, other: Edge<S>) {
        self.context.union_with(&other.context);
        self.provenance.extend(other.provenance);
        if other.confidence > self.confidence {
            self.confidence = other.confidence;
        }
        self.inferred = self.inferred && other.inferred;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrityError {
    #[error("edge {edge} references missing node `{node}`")]
    MissingNode { edge: EdgeId, node: String },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(EdgeId),
    #[error("edge id {found} does not match its content hash {expected}")]
    EdgeIdMismatch { found: EdgeId, expected: EdgeId },
    #[error("label `{0}` is not in canonical form")]
    NonCanonicalLabel(String),
    #[error("edge {edge} has confidence outside [0, 1]: {value}")]
    ConfidenceOutOfRange { edge: EdgeId, value: String },
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("integrity error: {0}")]
    Integrity(#[from] IntegrityError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Labels stored in a graph are trimmed and lowercase. Whitespace collapsing
/// and punctuation stripping are policy choices and are not checked here.
pub fn is_canonical_label(label: &str) -> bool {
    !label.is_empty() && label.trim() == label && label.to_lowercase() == label
}

/// Directed property multigraph, collapsed by `(source, predicate, target)`.
///
/// Node and edge maps are ordered so that iteration and serialization are
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph<S> {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<EdgeId, Edge<S>>,
}

impl<S> Default for KnowledgeGraph<S> {
    fn default() -> Self {
        Self {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }
}

/// A graph with no nodes and no edges.
pub fn empty_graph<S: Scalar>() -> KnowledgeGraph<S> {
    KnowledgeGraph::default()
}

impl<S: Scalar> KnowledgeGraph<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&Edge<S>> {
        self.edges.get(id)
    }

    /// Looks up the edge for a canonical triple.
    pub fn find_edge(&self, source: &str, predicate: &str, target: &str) -> Option<&Edge<S>> {
        self.edges.get(&EdgeId::for_triple(source, predicate, target))
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &Node> {
        self.nodes.values()
    }

    /// Edges in edge id order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = &Edge<S>> {
        self.edges.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub(crate) fn node_mut(&mut self, id: &str) -> Option<&mut Node> {
        self.nodes.get_mut(id)
    }

    pub(crate) fn edges_mut(&mut self) -> impl Iterator<Item = &mut Edge<S>> {
        self.edges.values_mut()
    }

    /// Inserts `node`, or unions its attributes into the existing node with
    /// the same id. Returns `true` when the node was new.
    pub fn insert_node(&mut self, node: Node) -> Result<bool, IntegrityError> {
        if !is_canonical_label(&node.id) {
            return Err(IntegrityError::NonCanonicalLabel(node.id));
        }
        match self.nodes.get_mut(&node.id) {
            Some(existing) => {
                existing.attributes.union_with(&node.attributes);
                Ok(false)
            }
            None => {
                self.nodes.insert(node.id.clone(), node);
                Ok(true)
            }
        }
    }

    /// Inserts `edge`, merging it into an existing edge with the same id
    /// (contexts unioned, provenance appended, max confidence kept).
    /// Both endpoints must already exist.
    pub fn insert_edge(&mut self, edge: Edge<S>) -> Result<(), IntegrityError> {
        check_edge(&edge)?;
        for endpoint in [&edge.source, &edge.target] {
            if !self.nodes.contains_key(endpoint) {
                return Err(IntegrityError::MissingNode {
                    edge: edge.id.clone(),
                    node: endpoint.clone(),
                });
            }
        }
        match self.edges.get_mut(&edge.id) {
            Some(existing) => existing.absorb(edge),
            None => {
                self.edges.insert(edge.id.clone(), edge);
            }
        }
        Ok(())
    }

    /// Removes edges for which `keep` returns false. Nodes are retained.
    pub fn retain_edges(&mut self, mut keep: impl FnMut(&Edge<S>) -> bool) {
        self.edges.retain(|_, e| keep(e));
    }

    /// Checks every graph invariant.
    pub fn validate(&self) -> Result<(), IntegrityError> {
        for (id, node) in &self.nodes {
            if id != &node.id || !is_canonical_label(id) {
                return Err(IntegrityError::NonCanonicalLabel(node.id.clone()));
            }
        }
        for (id, edge) in &self.edges {
            if id != &edge.id {
                return Err(IntegrityError::EdgeIdMismatch {
                    found: id.clone(),
                    expected: edge.id.clone(),
                });
            }
            check_edge(edge)?;
            for endpoint in [&edge.source, &edge.target] {
                if !self.nodes.contains_key(endpoint) {
                    return Err(IntegrityError::MissingNode {
                        edge: edge.id.clone(),
                        node: endpoint.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Copy with every provenance list sorted, for comparisons that ignore
    /// the order in which evidence arrived.
    pub fn with_sorted_provenance(&self) -> Self {
        let mut g = self.clone();
        for edge in g.edges.values_mut() {
            edge.provenance.sort();
        }
        g
    }

    /// Builds a graph from parts, rejecting duplicates and dangling edges.
    pub fn from_parts(
        nodes: impl IntoIterator<Item = Node>,
        edges: impl IntoIterator<Item = Edge<S>>,
    ) -> Result<Self, IntegrityError> {
        let mut g = Self::new();
        for node in nodes {
            if g.nodes.contains_key(&node.id) {
                return Err(IntegrityError::DuplicateNode(node.id));
            }
            g.insert_node(node)?;
        }
        for edge in edges {
            if g.edges.contains_key(&edge.id) {
                return Err(IntegrityError::DuplicateEdge(edge.id));
            }
            g.insert_edge(edge)?;
        }
        Ok(g)
    }
}

fn check_edge<S: Scalar>(edge: &Edge<S>) -> Result<(), IntegrityError> {
    for label in [&edge.source, &edge.predicate, &edge.target] {
        if !is_canonical_label(label) {
            return Err(IntegrityError::NonCanonicalLabel(label.clone()));
        }
    }
    let expected = EdgeId::for_triple(&edge.source, &edge.predicate, &edge.target);
    if expected != edge.id {
        return Err(IntegrityError::EdgeIdMismatch {
            found: edge.id.clone(),
            expected,
        });
    }
    if !edge.confidence.in_unit_interval() {
        return Err(IntegrityError::ConfidenceOutOfRange {
            edge: edge.id.clone(),
            value: edge.confidence.to_string(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    #[default]
    Json,
    #[serde(rename = "graphml")]
    GraphMl,
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::Json => "json",
            GraphFormat::GraphMl => "graphml",
        }
    }
}

/// Writes `g` in the given format. Output is deterministic: nodes and edges
/// are emitted in sorted id order.
pub fn serialize_graph<S: Scalar, W: Write>(
    g: &KnowledgeGraph<S>,
    format: GraphFormat,
    writer: W,
) -> io::Result<()> {
    match format {
        GraphFormat::Json => json::write(g, writer),
        GraphFormat::GraphMl => graphml::write(g, writer),
    }
}

pub fn serialize_to_vec<S: Scalar>(g: &KnowledgeGraph<S>, format: GraphFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    serialize_graph(g, format, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn deserialize_graph<S: Scalar>(
    bytes: &[u8],
    format: GraphFormat,
) -> Result<KnowledgeGraph<S>, GraphError> {
    match format {
        GraphFormat::Json => json::read(bytes),
        GraphFormat::GraphMl => graphml::read(bytes),
    }
}
