//! Folding extracted triples into one knowledge graph.
//!
//! Entities are merged purely by canonical label. Attribute and context
//! values from different sources coexist: merging only ever adds values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::ExtractionResult;
use crate::graph::{ContextTriple, Edge, EdgeId, KnowledgeGraph, Node};
use crate::scalar::Scalar;

/// Confidence of a freshly extracted edge, before topology scoring.
pub const DEFAULT_BASE_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregationError {
    #[error("label `{0}` is empty after normalization")]
    EmptyLabel(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("lowercasing cannot be disabled")]
    LowercaseRequired,
}

/// Label canonicalisation settings. Lowercasing is always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyFields")]
pub struct NormalizationPolicy {
    lowercase: bool,
    pub collapse_whitespace: bool,
    pub strip_punctuation_edges: bool,
}

#[derive(Deserialize)]
#[serde(default)]
struct PolicyFields {
    lowercase: bool,
    collapse_whitespace: bool,
    strip_punctuation_edges: bool,
}

impl Default for PolicyFields {
    fn default() -> Self {
        Self {
            lowercase: true,
            collapse_whitespace: true,
            strip_punctuation_edges: true,
        }
    }
}

impl TryFrom<PolicyFields> for NormalizationPolicy {
    type Error = AggregationError;

    fn try_from(f: PolicyFields) -> Result<Self, Self::Error> {
        if !f.lowercase {
            return Err(AggregationError::LowercaseRequired);
        }
        Ok(Self::new(f.collapse_whitespace, f.strip_punctuation_edges))
    }
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self::new(true, true)
    }
}

impl NormalizationPolicy {
    pub fn new(collapse_whitespace: bool, strip_punctuation_edges: bool) -> Self {
        Self {
            lowercase: true,
            collapse_whitespace,
            strip_punctuation_edges,
        }
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }
}

fn is_edge_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || "“”‘’«»„‚‹›–—…¡¿·•".contains(c)
}

fn normalize_once(raw: &str, policy: &NormalizationPolicy) -> String {
    let mut s = raw.trim().to_lowercase();
    if policy.collapse_whitespace {
        s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    if policy.strip_punctuation_edges {
        s = s.trim_matches(is_edge_punctuation).to_string();
    }
    s.trim().to_string()
}

/// Canonical label: trimmed, lowercase, inner whitespace collapsed and edge
/// punctuation stripped (the last two per `policy`). Idempotent.
pub fn normalize_label(raw: &str, policy: &NormalizationPolicy) -> Result<String, AggregationError> {
    let mut current = normalize_once(raw, policy);
    // Stripping can expose new edges (e.g. `" apple "`); iterate to a fixed point.
    loop {
        let next = normalize_once(&current, policy);
        if next == current {
            break;
        }
        current = next;
    }
    if current.is_empty() {
        Err(AggregationError::EmptyLabel(raw.to_string()))
    } else {
        Ok(current)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedTriple {
    pub triple: ContextTriple,
    pub reason: String,
}

/// Output of [`aggregate`]: the graph plus triples that could not be added.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated<S> {
    pub graph: KnowledgeGraph<S>,
    pub rejects: Vec<RejectedTriple>,
}

/// Incremental graph builder backing the functional API.
#[derive(Debug, Clone)]
pub struct Aggregator<S> {
    graph: KnowledgeGraph<S>,
    policy: NormalizationPolicy,
    base_confidence: S,
    rejects: Vec<RejectedTriple>,
}

impl<S: Scalar> Aggregator<S> {
    pub fn new(policy: NormalizationPolicy) -> Self {
        Self::from_graph(KnowledgeGraph::new(), policy)
    }

    pub fn from_graph(graph: KnowledgeGraph<S>, policy: NormalizationPolicy) -> Self {
        Self {
            graph,
            policy,
            base_confidence: S::lit(DEFAULT_BASE_CONFIDENCE),
            rejects: Vec::new(),
        }
    }

    /// Panics unless `base_confidence` lies in `[0, 1]`.
    pub fn with_base_confidence(mut self, base_confidence: S) -> Self {
        assert!(base_confidence.in_unit_interval(), "base confidence must be in [0, 1]");
        self.base_confidence = base_confidence;
        self
    }

    /// Adds one triple. On a normalization failure the graph is untouched,
    /// the triple is recorded as rejected and the error returned.
    pub fn add(&mut self, triple: &ContextTriple) -> Result<EdgeId, AggregationError> {
        let labels = [&triple.subject, &triple.predicate, &triple.object]
            .map(|raw| normalize_label(raw, &self.policy));
        let [source, predicate, target] = match labels {
            [Ok(s), Ok(p), Ok(o)] => [s, p, o],
            [s, p, o] => {
                let err = [s, p, o].into_iter().find_map(Result::err).expect("one label failed");
                self.rejects.push(RejectedTriple {
                    triple: triple.clone(),
                    reason: err.to_string(),
                });
                return Err(err);
            }
        };
        for id in [&source, &target] {
            self.graph
                .insert_node(Node::new(id.clone()))
                .expect("normalized labels are canonical");
        }
        let edge = Edge::new(source, predicate, target, self.base_confidence)
            .with_context(triple.context.clone())
            .with_provenance(triple.provenance.clone());
        let id = edge.id.clone();
        self.graph.insert_edge(edge).expect("endpoints were just inserted");
        Ok(id)
    }

    pub fn graph(&self) -> &KnowledgeGraph<S> {
        &self.graph
    }

    pub fn finish(self) -> Aggregated<S> {
        Aggregated {
            graph: self.graph,
            rejects: self.rejects,
        }
    }
}

/// Returns `g` with `t` added: endpoints become nodes, the context attaches
/// to the edge, and an existing identical edge absorbs the new evidence.
pub fn add_triple<S: Scalar>(
    g: &KnowledgeGraph<S>,
    t: &ContextTriple,
    policy: &NormalizationPolicy,
) -> Result<KnowledgeGraph<S>, AggregationError> {
    let mut agg = Aggregator::from_graph(g.clone(), *policy);
    agg.add(t)?;
    Ok(agg.graph)
}

pub(crate) fn merge_attribute_in_place<S: Scalar>(
    g: &mut KnowledgeGraph<S>,
    node_id: &str,
    key: &str,
    value: &str,
    policy: &NormalizationPolicy,
) -> Result<bool, AggregationError> {
    let value = normalize_label(value, policy)?;
    let node = g
        .node_mut(node_id)
        .ok_or_else(|| AggregationError::UnknownNode(node_id.to_string()))?;
    node.attributes
        .insert(key, &value)
        .map_err(|_| AggregationError::EmptyLabel(key.to_string()))
}

/// Adds `value` to the node's attribute set under `key`. Existing values are
/// never replaced; a value equal to one already present (after
/// normalization) leaves the set unchanged.
pub fn merge_attribute<S: Scalar>(
    g: &KnowledgeGraph<S>,
    node_id: &str,
    key: &str,
    value: &str,
    policy: &NormalizationPolicy,
) -> Result<KnowledgeGraph<S>, AggregationError> {
    let mut out = g.clone();
    merge_attribute_in_place(&mut out, node_id, key, value, policy)?;
    Ok(out)
}

/// Union of two graphs. Shared nodes union their attributes; shared edges
/// union contexts, concatenate provenance (`a` first) and keep the larger
/// confidence.
pub fn merge_graphs<S: Scalar>(a: &KnowledgeGraph<S>, b: &KnowledgeGraph<S>) -> KnowledgeGraph<S> {
    let mut out = a.clone();
    for node in b.nodes() {
        out.insert_node(node.clone()).expect("source graph is valid");
    }
    for edge in b.edges() {
        out.insert_edge(edge.clone()).expect("endpoints present after node union");
    }
    out
}

/// Builds one graph from extraction results, ordered by
/// `(source_id, chunk_index)` and then triple position.
pub fn aggregate<S: Scalar>(results: &[ExtractionResult], policy: &NormalizationPolicy) -> Aggregated<S> {
    aggregate_with(results, policy, S::lit(DEFAULT_BASE_CONFIDENCE))
}

pub fn aggregate_with<S: Scalar>(
    results: &[ExtractionResult],
    policy: &NormalizationPolicy,
    base_confidence: S,
) -> Aggregated<S> {
    let mut ordered: Vec<&ExtractionResult> = results.iter().collect();
    ordered.sort_by(|a, b| (&a.source_id, a.chunk_index).cmp(&(&b.source_id, b.chunk_index)));
    let mut agg = Aggregator::new(*policy).with_base_confidence(base_confidence);
    for result in ordered {
        for triple in &result.triples {
            let _ = agg.add(triple);
        }
    }
    agg.finish()
}
