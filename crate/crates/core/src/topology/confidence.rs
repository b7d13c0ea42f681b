//! Edge confidence from independent supporting paths.
//!
//! Each supporting path `p` contributes weight `base_path_weight^len(p)`;
//! the edge's own extraction contributes `direct_edge_weight`. Evidence is
//! combined noisy-OR style:
//!
//! ```text
//! confidence = 1 - (1 - direct) * prod_p (1 - base^len(p))
//! ```
//!
//! clamped to `[confidence_floor, confidence_ceiling]`.

use std::collections::HashSet;

use super::adjacency::Adjacency;
use super::paths::{disjoint_paths, PathEvidence};
use super::{TopologyConfig, TopologyError};
use crate::graph::{EdgeId, KnowledgeGraph};
use crate::scalar::Scalar;

/// Noisy-OR of a direct weight and per-path weights.
pub fn noisy_or<S: Scalar>(direct: S, path_weights: impl IntoIterator<Item = S>) -> S {
    let miss = path_weights
        .into_iter()
        .fold(S::one() - direct, |acc, w| acc * (S::one() - w));
    S::one() - miss
}

/// Weight of one supporting path of `length` edges.
pub fn path_weight<S: Scalar>(base: S, length: usize) -> S {
    base.powi(length as i32)
}

/// Fraction of the other nodes adjacent to `node_id`, in either direction.
/// Parallel edges and self-loops do not count extra.
pub fn degree_centrality<S: Scalar>(g: &KnowledgeGraph<S>, node_id: &str) -> Result<S, TopologyError> {
    if !g.contains_node(node_id) {
        return Err(TopologyError::UnknownNode(node_id.to_string()));
    }
    let others = g.node_count() - 1;
    if others == 0 {
        return Ok(S::zero());
    }
    let degree = Adjacency::new(g, true).neighbours(node_id).len();
    Ok(S::from_usize(degree).expect("count fits") / S::from_usize(others).expect("count fits"))
}

fn supports_in(adj: &Adjacency<'_>, source: &str, target: &str, id: &EdgeId, config_len: usize, undirected: bool) -> Vec<PathEvidence> {
    if source == target {
        return Vec::new();
    }
    let mut excluded = HashSet::from([id.clone()]);
    disjoint_paths(adj, source, target, config_len, usize::MAX, undirected, &mut excluded)
}

/// Edge-disjoint paths supporting edge `id`, computed with the edge itself
/// removed. Inferred edges never count as support.
pub fn edge_supports<S: Scalar>(
    g: &KnowledgeGraph<S>,
    id: &EdgeId,
    config: &TopologyConfig<S>,
) -> Result<Vec<PathEvidence>, TopologyError> {
    let edge = g.edge(id).ok_or_else(|| TopologyError::UnknownEdge(id.clone()))?;
    let adj = Adjacency::new(g, false);
    Ok(supports_in(
        &adj,
        &edge.source,
        &edge.target,
        id,
        config.max_path_length,
        config.undirected_paths,
    ))
}

fn clamp<S: Scalar>(value: S, config: &TopologyConfig<S>) -> S {
    value.max(config.confidence_floor).min(config.confidence_ceiling)
}

/// Rescores every extracted edge from its supporting paths. Inferred edges
/// keep their confidence.
pub fn reinforce_confidence<S: Scalar>(g: &KnowledgeGraph<S>, config: &TopologyConfig<S>) -> KnowledgeGraph<S> {
    let adj = Adjacency::new(g, false);
    let scores: Vec<(EdgeId, S)> = g
        .edges()
        .filter(|e| !e.inferred)
        .map(|e| {
            let supports = supports_in(
                &adj,
                &e.source,
                &e.target,
                &e.id,
                config.max_path_length,
                config.undirected_paths,
            );
            let weights = supports
                .iter()
                .map(|p| path_weight(config.base_path_weight, p.length()));
            (e.id.clone(), clamp(noisy_or(config.direct_edge_weight, weights), config))
        })
        .collect();

    let mut out = g.clone();
    let mut scores = scores.into_iter().peekable();
    for edge in out.edges_mut() {
        if scores.peek().is_some_and(|(id, _)| id == &edge.id) {
            edge.confidence = scores.next().expect("peeked").1;
        }
    }
    out
}
