//! Entity disambiguation by neighbourhood overlap with sense cue sets.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::adjacency::Adjacency;
use super::TopologyError;
use crate::aggregation::{merge_attribute_in_place, normalize_label, NormalizationPolicy};
use crate::graph::KnowledgeGraph;
use crate::scalar::Scalar;

/// Attribute key under which the winning sense is recorded.
pub const SENSE_ATTRIBUTE: &str = "sense";

/// A candidate meaning of an entity and the node labels that indicate it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SenseFields")]
pub struct SenseSignature {
    pub sense_label: String,
    #[serde(rename = "cues")]
    pub cue_labels: BTreeSet<String>,
}

#[derive(Deserialize)]
struct SenseFields {
    sense_label: String,
    cues: Vec<String>,
}

impl TryFrom<SenseFields> for SenseSignature {
    type Error = TopologyError;

    fn try_from(f: SenseFields) -> Result<Self, Self::Error> {
        SenseSignature::new(&f.sense_label, f.cues.iter().map(String::as_str))
    }
}

impl SenseSignature {
    /// Cue labels are normalized with the default policy; at least one must
    /// survive normalization.
    pub fn new<'a>(sense_label: &str, cues: impl IntoIterator<Item = &'a str>) -> Result<Self, TopologyError> {
        let policy = NormalizationPolicy::default();
        let cue_labels: BTreeSet<String> = cues
            .into_iter()
            .filter_map(|c| normalize_label(c, &policy).ok())
            .collect();
        if cue_labels.is_empty() {
            return Err(TopologyError::InvalidSense(format!(
                "sense `{sense_label}` has no usable cue labels"
            )));
        }
        if sense_label.trim().is_empty() {
            return Err(TopologyError::InvalidSense("empty sense label".into()));
        }
        Ok(Self {
            sense_label: sense_label.trim().to_string(),
            cue_labels,
        })
    }
}




#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SenseScore<S> {
    pub sense_label: String,
    pub score: S,
}

/// Labels of nodes within `radius` hops of `node_id` (either direction),
/// excluding the node itself.
pub fn neighbourhood<S: Scalar>(g: &KnowledgeGraph<S>, node_id: &str, radius: usize) -> BTreeSet<String> {
    let adj = Adjacency::new(g, true);
    let mut seen: HashSet<&str> = HashSet::from([node_id]);
    let mut queue = VecDeque::from([(node_id, 0usize)]);
    let mut out = BTreeSet::new();
    while let Some((u, depth)) = queue.pop_front() {
        if depth == radius {
            continue;
        }
        for v in adj.neighbours(u) {
            if seen.insert(v) {
                out.insert(v.to_string());
                queue.push_back((v, depth + 1));
            }
        }
    }
    out
}

/// Scores each sense by the fraction of its cues found in the node's
/// neighbourhood and ranks them, best first, ties kept in input order.
pub fn rank_senses<S: Scalar>(
    g: &KnowledgeGraph<S>,
    node_id: &str,
    senses: &[SenseSignature],
    radius: usize,
) -> Result<Vec<SenseScore<S>>, TopologyError> {
    if !g.contains_node(node_id) {
        return Err(TopologyError::UnknownNode(node_id.to_string()));
    }
    if senses.is_empty() {
        return Err(TopologyError::InvalidSense(format!("no senses given for `{node_id}`")));
    }
    let around = neighbourhood(g, node_id, radius);
    let mut ranked: Vec<SenseScore<S>> = senses
        .iter()
        .map(|sense| {
            let hits = sense.cue_labels.iter().filter(|c| around.contains(*c)).count();
            let score = S::from_usize(hits).expect("count fits") / S::from_usize(sense.cue_labels.len()).expect("count fits");
            SenseScore {
                sense_label: sense.sense_label.clone(),
                score,
            }
        })
        .collect();
    ranked.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("scores are finite"));
    Ok(ranked)
}

/// Ranks the senses of `node_id` and, when the best score is positive,
/// records the best sense as a `sense` attribute on the node.
pub fn disambiguate_entity<S: Scalar>(
    g: &KnowledgeGraph<S>,
    node_id: &str,
    senses: &[SenseSignature],
    radius: usize,
) -> Result<(KnowledgeGraph<S>, Vec<SenseScore<S>>), TopologyError> {
    let ranked = rank_senses(g, node_id, senses, radius)?;
    let mut out = g.clone();
    if let Some(top) = ranked.first().filter(|t| t.score > S::zero()) {
        merge_attribute_in_place(&mut out, node_id, SENSE_ATTRIBUTE, &top.sense_label, &NormalizationPolicy::default())
            .map_err(|e| TopologyError::InvalidSense(e.to_string()))?;
    }
    Ok((out, ranked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Node};

    fn star(centre: &str, leaves: &[&str]) -> KnowledgeGraph<f64> {
        let mut g = KnowledgeGraph::new();
        g.insert_node(Node::new(centre)).unwrap();
        for leaf in leaves {
            g.insert_node(Node::new(*leaf)).unwrap();
            g.insert_edge(Edge::new(centre, "related_to", *leaf, 0.5)).unwrap();
        }
        g
    }

    #[test]
    fn apple_company_sense() {
        let g = star("apple", &["company", "smartphone"]);
        let senses = [
            SenseSignature::new("fruit", ["fruit", "tree"]).unwrap(),
            SenseSignature::new("company", ["company", "smartphone"]).unwrap(),
        ];
        let (out, ranked) = disambiguate_entity(&g, "apple", &senses, 1).unwrap();
        assert_eq!(ranked[0].sense_label, "company");
        assert_eq!(ranked[0].score, 1.0);
        assert_eq!(ranked[1].score, 0.0);
        assert!(out.node("apple").unwrap().attributes.contains(SENSE_ATTRIBUTE, "company"));
    }

    #[test]
    fn isolated_node_gets_no_sense() {
        let g = star("apple", &[]);
        let senses = [SenseSignature::new("fruit", ["fruit"]).unwrap()];
        let (out, ranked) = disambiguate_entity(&g, "apple", &senses, 1).unwrap();
        assert_eq!(ranked[0].score, 0.0);
        assert!(out.node("apple").unwrap().attributes.is_empty());
    }

    #[test]
    fn ties_keep_input_order() {
        let g = star("apple", &["tree"]);
        let senses = [
            SenseSignature::new("b", ["tree"]).unwrap(),
            SenseSignature::new("a", ["tree"]).unwrap(),
        ];
        let ranked = rank_senses::<f64>(&g, "apple", &senses, 1).unwrap();
        assert_eq!(ranked[0].sense_label, "b");
        assert_eq!(ranked[0].score, ranked[1].score);
    }

    #[test]
    fn radius_widens_neighbourhood() {
        let mut g = star("apple", &["iphone"]);
        g.insert_node(Node::new("company")).unwrap();
        g.insert_edge(Edge::new("iphone", "made_by", "company", 0.5)).unwrap();
        assert!(!neighbourhood(&g, "apple", 1).contains("company"));
        assert!(neighbourhood(&g, "apple", 2).contains("company"));
    }

    #[test]
    fn senses_file_shape() {
        let s: SenseSignature = serde_json::from_str(r#"{"sense_label":"fruit","cues":["Fruit","tree"]}"#).unwrap();
        assert!(s.cue_labels.contains("fruit"));
        assert!(serde_json::from_str::<SenseSignature>(r#"{"sense_label":"x","cues":[]}"#).is_err());
    }

    #[test]
    fn unknown_node_and_empty_senses_rejected() {
        let g = star("apple", &[]);
        let senses = [SenseSignature::new("fruit", ["fruit"]).unwrap()];
        assert!(matches!(rank_senses::<f64>(&g, "pear", &senses, 1), Err(TopologyError::UnknownNode(_))));
        assert!(rank_senses::<f64>(&g, "apple", &[], 1).is_err());
    }
}
