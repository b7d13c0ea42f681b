use std::collections::BTreeMap;

use serde::Serialize;

use super::confidence::reinforce_confidence;
use super::rules::{infer_implicit_relations, InferenceRule};
use super::senses::{disambiguate_entity, SenseScore, SenseSignature};
use super::TopologyConfig;
use crate::graph::KnowledgeGraph;
use crate::scalar::Scalar;

/// Senses file contents: node label to candidate senses.
pub type SenseTable = BTreeMap<String, Vec<SenseSignature>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepError {
    pub step: &'static str,
    pub message: String,
}

/// What one discovery run did.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct DiscoveryReport<S> {
    pub enabled: bool,
    pub reinforced_edges: usize,
    pub disambiguated: BTreeMap<String, Vec<SenseScore<S>>>,
    pub inferred_edges: usize,
    pub errors: Vec<StepError>,
}

/// Reinforces confidences, disambiguates the listed nodes, then applies the
/// rules. A failing disambiguation leaves every node untouched and is
/// reported; the other steps cannot fail.
pub fn discover<S: Scalar>(
    g: &KnowledgeGraph<S>,
    rules: &[InferenceRule<S>],
    senses_by_node: &SenseTable,
    config: &TopologyConfig<S>,
) -> (KnowledgeGraph<S>, DiscoveryReport<S>) {
    let mut report = DiscoveryReport {
        enabled: config.enabled,
        reinforced_edges: 0,
        disambiguated: BTreeMap::new(),
        inferred_edges: 0,
        errors: Vec::new(),
    };
    if !config.enabled {
        return (g.clone(), report);
    }

    let reinforced = reinforce_confidence(g, config);
    report.reinforced_edges = reinforced.edges().filter(|e| !e.inferred).count();

    let mut staged = reinforced.clone();
    let mut rankings = BTreeMap::new();
    let mut failed = false;
    for (node, senses) in senses_by_node {
        match disambiguate_entity(&staged, node, senses, config.disambiguation_radius) {
            Ok((next, ranking)) => {
                staged = next;
                rankings.insert(node.clone(), ranking);
            }
            Err(e) => {
                report.errors.push(StepError {
                    step: "disambiguate",
                    message: e.to_string(),
                });
                failed = true;
            }
        }
    }
    let disambiguated = if failed {
        reinforced
    } else {
        report.disambiguated = rankings;
        staged
    };

    let before = disambiguated.edges().filter(|e| e.inferred).count();
    let out = infer_implicit_relations(&disambiguated, rules);
    report.inferred_edges = out.edges().filter(|e| e.inferred).count() - before;
    (out, report)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Node};

    fn fixture() -> KnowledgeGraph<f64> {
        let mut g = KnowledgeGraph::new();
        for (s, p, o) in [
            ("einstein", "worked_at", "princeton"),
            ("princeton", "collaborated_with", "gödel"),
            ("einstein", "influenced", "gödel"),
            ("curie", "mentor", "meitner"),
            ("meitner", "colleague", "fermi"),
        ] {
            g.insert_node(Node::new(s)).unwrap();
            g.insert_node(Node::new(o)).unwrap();
            g.insert_edge(Edge::new(s, p, o, 0.5)).unwrap();
        }
        g
    }

    #[test]
    fn einstein_and_lineage_compose() {
        let rules = [InferenceRule::new("lineage", ["mentor", "colleague"], "scientific_lineage", 0.9).unwrap()];
        let (out, report) = discover(&fixture(), &rules, &SenseTable::new(), &TopologyConfig::default());
        let influenced = out.find_edge("einstein", "influenced", "gödel").unwrap();
        assert!((influenced.confidence - 0.745).abs() < 1e-9);
        assert!(out.find_edge("curie", "scientific_lineage", "fermi").is_some());
        assert_eq!(report.inferred_edges, 1);
        assert!(report.errors.is_empty());
    }

    #[test]
    fn disabled_returns_input() {
        let g = fixture();
        let (out, report) = discover(&g, &[], &SenseTable::new(), &TopologyConfig::disabled());
        assert_eq!(out, g);
        assert!(!report.enabled);
    }

    #[test]
    fn failed_disambiguation_is_all_or_nothing() {
        let g = fixture();
        let mut senses = SenseTable::new();
        senses.insert("einstein".into(), vec![SenseSignature::new("physicist", ["princeton"]).unwrap()]);
        senses.insert("nobody".into(), vec![SenseSignature::new("x", ["y"]).unwrap()]);
        let (out, report) = discover(&g, &[], &senses, &TopologyConfig::default());
        assert_eq!(report.errors.len(), 1);
        assert!(out.node("einstein").unwrap().attributes.is_empty());
        assert_eq!(out.node_count(), g.node_count());
    }
}
