//! Shortest and edge-disjoint path search.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::adjacency::{Adjacency, Direction};
use super::TopologyError;
use crate::graph::{EdgeId, KnowledgeGraph};
use crate::scalar::Scalar;

/// A simple path between two nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathEvidence {
    /// Node ids from start to end; one longer than `edges`.
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeId>,
}

impl PathEvidence {
    pub fn length(&self) -> usize {
        self.edges.len()
    }

    pub fn start(&self) -> &str {
        &self.nodes[0]
    }

    pub fn end(&self) -> &str {
        self.nodes.last().expect("paths have at least one node")
    }

    /// Checks that this is a simple path in `g`: consecutive nodes are joined
    /// by the listed edge (in either direction when `undirected`), and no
    /// node repeats.
    pub fn is_valid_in<S: Scalar>(&self, g: &KnowledgeGraph<S>, undirected: bool) -> bool {
        if self.edges.is_empty() || self.nodes.len() != self.edges.len() + 1 {
            return false;
        }
        let distinct: HashSet<&String> = self.nodes.iter().collect();
        if distinct.len() != self.nodes.len() {
            return false;
        }
        self.edges.iter().enumerate().all(|(i, id)| {
            let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
            g.edge(id).is_some_and(|e| {
                (&e.source == a && &e.target == b) || (undirected && &e.source == b && &e.target == a)
            })
        })
    }
}

fn expand<'g>(
    adj: &Adjacency<'g>,
    frontier: &[&'g str],
    dist: &mut HashMap<&'g str, usize>,
    level: usize,
    direction: Direction,
    undirected: bool,
    excluded: &HashSet<EdgeId>,
) -> Vec<&'g str> {
    let mut next = Vec::new();
    for &u in frontier {
        for &(v, e) in adj.steps(u, direction, undirected) {
            if excluded.contains(e) || dist.contains_key(v) {
                continue;
            }
            dist.insert(v, level + 1);
            next.push(v);
        }
    }
    next
}

/// Bidirectional BFS returning the lexicographically smallest (by node id
/// sequence) among all shortest paths of length at most `max_len`.
///
/// Frontiers grow one full level at a time, smaller side first. Once they
/// meet, the shortest-path DAG is recovered from both distance maps and
/// walked greedily from `source`, always taking the smallest node id that
/// still lies on a shortest path, and the smallest edge id between two
/// consecutive nodes.
pub(crate) fn shortest_path(
    adj: &Adjacency<'_>,
    source: &str,
    target: &str,
    max_len: usize,
    undirected: bool,
    excluded: &HashSet<EdgeId>,
) -> Option<PathEvidence> {
    if source == target || max_len == 0 {
        return None;
    }
    let mut fwd: HashMap<&str, usize> = HashMap::from([(source, 0)]);
    let mut bwd: HashMap<&str, usize> = HashMap::from([(target, 0)]);
    let mut fwd_layers: Vec<Vec<&str>> = vec![vec![source]];
    let mut bwd_frontier: Vec<&str> = vec![target];
    let (mut a, mut b) = (0usize, 0usize);

    loop {
        if a + b >= max_len {
            return None;
        }
        let fwd_frontier = fwd_layers.last().expect("layer 0 exists");
        if fwd_frontier.is_empty() || bwd_frontier.is_empty() {
            return None;
        }
        let met = if fwd_frontier.len() <= bwd_frontier.len() {
            let next = expand(adj, fwd_frontier, &mut fwd, a, Direction::Forward, undirected, excluded);
            a += 1;
            let met = next.iter().any(|v| bwd.contains_key(v));
            fwd_layers.push(next);
            met
        } else {
            let next = expand(adj, &bwd_frontier, &mut bwd, b, Direction::Backward, undirected, excluded);
            b += 1;
            let met = next.iter().any(|v| fwd.contains_key(v));
            bwd_frontier = next;
            met
        };
        if met {
            break;
        }
    }

    // Meeting nodes sit at forward level `a` and backward level `b`.
    let total = a + b;
    let forward_step = |u: &str| {
        adj.steps(u, Direction::Forward, undirected)
            .iter()
            .filter(|(_, e)| !excluded.contains(*e))
    };
    let mut on_path: Vec<HashSet<&str>> = vec![HashSet::new(); a + 1];
    on_path[a] = fwd_layers[a]
        .iter()
        .copied()
        .filter(|v| bwd.get(v) == Some(&b))
        .collect();
    for level in (0..a).rev() {
        let (lower, upper) = on_path.split_at_mut(level + 1);
        for &u in &fwd_layers[level] {
            if forward_step(u).any(|(v, _)| upper[0].contains(v)) {
                lower[level].insert(u);
            }
        }
    }

    let mut nodes = vec![source.to_string()];
    let mut edges = Vec::with_capacity(total);
    let mut current = source;
    #[allow(clippy::needless_range_loop)]
    for position in 1..=total {
        let (next, edge) = forward_step(current)
            .find(|(v, _)| {
                if position <= a {
                    on_path[position].contains(v)
                } else {
                    bwd.get(v) == Some(&(total - position))
                }
            })
            .copied()
            .expect("shortest-path DAG is connected");
        nodes.push(next.to_string());
        edges.push(edge.clone());
        current = next;
    }
    Some(PathEvidence { nodes, edges })
}

/// Greedy edge-disjoint paths: repeatedly take the shortest path and remove
/// its edges. Sorted by length, then node sequence.
pub(crate) fn disjoint_paths(
    adj: &Adjacency<'_>,
    source: &str,
    target: &str,
    max_len: usize,
    max_paths: usize,
    undirected: bool,
    excluded: &mut HashSet<EdgeId>,
) -> Vec<PathEvidence> {
    let mut paths = Vec::new();
    while paths.len() < max_paths {
        let Some(path) = shortest_path(adj, source, target, max_len, undirected, excluded) else {
            break;
        };
        excluded.extend(path.edges.iter().cloned());
        paths.push(path);
    }
    paths.sort_by(|x, y| (x.length(), &x.nodes).cmp(&(y.length(), &y.nodes)));
    paths
}

fn check_endpoints<S: Scalar>(g: &KnowledgeGraph<S>, source: &str, target: &str) -> Result<(), TopologyError> {
    for id in [source, target] {
        if !g.contains_node(id) {
            return Err(TopologyError::UnknownNode(id.to_string()));
        }
    }
    if source == target {
        return Err(TopologyError::SameEndpoints(source.to_string()));
    }
    Ok(())
}

/// Shortest simple path from `source` to `target` with at most `max_len`
/// edges, ties broken by smallest node id sequence. Inferred edges are
/// traversed like any other edge.
pub fn bidirectional_bfs<S: Scalar>(
    g: &KnowledgeGraph<S>,
    source: &str,
    target: &str,
    max_len: usize,
    undirected: bool,
) -> Result<Option<PathEvidence>, TopologyError> {
    check_endpoints(g, source, target)?;
    let adj = Adjacency::new(g, true);
    Ok(shortest_path(&adj, source, target, max_len, undirected, &HashSet::new()))
}

/// Up to `max_paths` pairwise edge-disjoint paths, found greedily.
pub fn edge_disjoint_paths<S: Scalar>(
    g: &KnowledgeGraph<S>,
    source: &str,
    target: &str,
    max_len: usize,
    max_paths: usize,
    undirected: bool,
) -> Result<Vec<PathEvidence>, TopologyError> {
    check_endpoints(g, source, target)?;
    let adj = Adjacency::new(g, true);
    Ok(disjoint_paths(&adj, source, target, max_len, max_paths, undirected, &mut HashSet::new()))
}
