use std::collections::{HashMap, HashSet};

use crate::graph::{EdgeId, KnowledgeGraph};
use crate::scalar::Scalar;

/// Which way a traversal step follows edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// Along edge direction (source to target).
    Forward,
    /// Against edge direction.
    Backward,
}

type Steps<'g> = Vec<(&'g str, &'g EdgeId)>;

/// Neighbour lists over a graph snapshot, sorted by `(neighbour, edge id)`.
pub(crate) struct Adjacency<'g> {
    out: HashMap<&'g str, Steps<'g>>,
    inc: HashMap<&'g str, Steps<'g>>,
    both: HashMap<&'g str, Steps<'g>>,
}

const NO_STEPS: &Steps<'static> = &Vec::new();

impl<'g> Adjacency<'g> {
    /// Builds the index. Inferred edges are only included when asked for.
    pub(crate) fn new<S: Scalar>(g: &'g KnowledgeGraph<S>, include_inferred: bool) -> Self {
        let mut out: HashMap<&str, Steps<'g>> = HashMap::new();
        let mut inc: HashMap<&str, Steps<'g>> = HashMap::new();
        for edge in g.edges().filter(|e| include_inferred || !e.inferred) {
            out.entry(&edge.source).or_default().push((&edge.target, &edge.id));
            inc.entry(&edge.target).or_default().push((&edge.source, &edge.id));
        }
        let mut both: HashMap<&str, Steps<'g>> = HashMap::new();
        for map in [&out, &inc] {
            for (node, steps) in map {
                both.entry(node).or_default().extend(steps.iter().copied());
            }
        }
        for steps in out.values_mut().chain(inc.values_mut()).chain(both.values_mut()) {
            steps.sort_unstable();
            steps.dedup();
        }
        Self { out, inc, both }
    }

    /// Steps available from `node`, sorted by neighbour then edge id.
    pub(crate) fn steps(&self, node: &str, direction: Direction, undirected: bool) -> &[(&'g str, &'g EdgeId)] {
        let map = match (undirected, direction) {
            (true, _) => &self.both,
            (false, Direction::Forward) => &self.out,
            (false, Direction::Backward) => &self.inc,
        };
        map.get(node).unwrap_or(NO_STEPS)
    }

    /// Distinct neighbours of `node` in either direction, excluding itself.
    pub(crate) fn neighbours(&self, node: &str) -> HashSet<&'g str> {
        self.steps(node, Direction::Forward, true)
            .iter()
            .map(|(n, _)| *n)
            .filter(|n| *n != node)
            .collect()
    }
}
