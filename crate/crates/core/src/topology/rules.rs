//! Implicit relations from predicate-path rules.
//!
//! A rule `[p1, p2, ..., pk] -> q` fires on every simple directed path whose
//! edges carry predicates `p1..pk` in order, adding an inferred edge
//! `q(start, end)` with confidence
//! `prod(edge confidences) * discount^(k - 1)`. Matching only uses extracted
//! edges, so rules never chain within one pass.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::TopologyError;
use crate::aggregation::{normalize_label, NormalizationPolicy};
use crate::graph::{Edge, EdgeId, ExtractorKind, KnowledgeGraph, Provenance};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleFields<S>", bound = "S: Scalar")]
pub struct InferenceRule<S> {
    pub name: String,
    pub pattern: Vec<String>,
    pub inferred_predicate: String,
    pub discount: S,
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar")]
struct RuleFields<S> {
    name: String,
    pattern: Vec<String>,
    inferred_predicate: String,
    discount: S,
}

impl<S: Scalar> TryFrom<RuleFields<S>> for InferenceRule<S> {
    type Error = TopologyError;

    fn try_from(f: RuleFields<S>) -> Result<Self, Self::Error> {
        InferenceRule::new(&f.name, f.pattern.iter().map(String::as_str), &f.inferred_predicate, f.discount)
    }
}

impl<S: Scalar> InferenceRule<S> {
    /// Labels are normalized with the default policy. The pattern needs at
    /// least two predicates and the discount must lie in `(0, 1]`.
    pub fn new<'a>(
        name: &str,
        pattern: impl IntoIterator<Item = &'a str>,
        inferred_predicate: &str,
        discount: S,
    ) -> Result<Self, TopologyError> {
        let policy = NormalizationPolicy::default();
        let invalid = |msg: String| TopologyError::InvalidRule {
            name: name.to_string(),
            reason: msg,
        };
        let pattern = pattern
            .into_iter()
            .map(|p| normalize_label(p, &policy))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(e.to_string()))?;
        if pattern.len() < 2 {
            return Err(invalid(format!("pattern needs at least 2 predicates, got {}", pattern.len())));
        }
        if !(discount > S::zero() && discount <= S::one()) {
            return Err(invalid(format!("discount {discount} outside (0, 1]")));
        }
        let inferred_predicate = normalize_label(inferred_predicate, &policy).map_err(|e| invalid(e.to_string()))?;
        if name.trim().is_empty() {
            return Err(invalid("empty rule name".into()));
        }
        Ok(Self {
            name: name.trim().to_string(),
            pattern,
            inferred_predicate,
            discount,
        })
    }
}

struct Match<S> {
    edges: Vec<EdgeId>,
    start: String,
    end: String,
    confidence: S,
}

fn find_matches<S: Scalar>(g: &KnowledgeGraph<S>, rule: &InferenceRule<S>) -> Vec<Match<S>> {
    let mut by_source_predicate: HashMap<(&str, &str), Vec<&Edge<S>>> = HashMap::new();
    for e in g.edges().filter(|e| !e.inferred) {
        by_source_predicate
            .entry((&e.source, &e.predicate))
            .or_default()
            .push(e);
    }

    let mut matches = Vec::new();
    let mut path: Vec<&Edge<S>> = Vec::new();
    let mut nodes: Vec<&str> = Vec::new();

    fn extend<'g, S: Scalar>(
        rule: &InferenceRule<S>,
        index: &HashMap<(&str, &str), Vec<&'g Edge<S>>>,
        path: &mut Vec<&'g Edge<S>>,
        nodes: &mut Vec<&'g str>,
        out: &mut Vec<Match<S>>,
    ) {
        let depth = path.len();
        if depth == rule.pattern.len() {
            let confidence = path.iter().fold(S::one(), |acc, e| acc * e.confidence)
                * rule.discount.powi(depth as i32 - 1);
            out.push(Match {
                edges: path.iter().map(|e| e.id.clone()).collect(),
                start: nodes[0].to_string(),
                end: nodes[depth].to_string(),
                confidence,
            });
            return;
        }
        let at = nodes[depth];
        let Some(candidates) = index.get(&(at, rule.pattern[depth].as_str())) else {
            return;
        };
        for edge in candidates {
            if nodes.contains(&edge.target.as_str()) {
                continue;
            }
            path.push(edge);
            nodes.push(&edge.target);
            extend(rule, index, path, nodes, out);
            path.pop();
            nodes.pop();
        }
    }

    let first = rule.pattern[0].as_str();
    for start in g.edges().filter(|e| !e.inferred && e.predicate == first) {
        if start.source == start.target {
            continue;
        }
        path.push(start);
        nodes.push(&start.source);
        nodes.push(&start.target);
        extend(rule, &by_source_predicate, &mut path, &mut nodes, &mut matches);
        path.clear();
        nodes.clear();
    }
    matches
}

/// Applies every rule once to the extracted edges of `g` and adds the
/// resulting inferred edges. Extracted edges are never modified; when the
/// same inferred edge is derived more than once the largest confidence is
/// kept and every witness is recorded in its provenance.
pub fn infer_implicit_relations<S: Scalar>(g: &KnowledgeGraph<S>, rules: &[InferenceRule<S>]) -> KnowledgeGraph<S> {
    let mut derived: BTreeMap<EdgeId, Edge<S>> = BTreeMap::new();
    for rule in rules {
        for m in find_matches(g, rule) {
            let edge = Edge::new(m.start, rule.inferred_predicate.clone(), m.end, m.confidence)
                .with_provenance(Provenance::inferred(&rule.name, m.edges));
            if g.edge(&edge.id).is_some_and(|existing| !existing.inferred) {
                continue;
            }
            match derived.get_mut(&edge.id) {
                Some(existing) => {
                    if edge.confidence > existing.confidence {
                        existing.confidence = edge.confidence;
                    }
                    for p in edge.provenance {
                        if !existing.provenance.contains(&p) {
                            existing.provenance.push(p);
                        }
                    }
                }
                None => {
                    derived.insert(edge.id.clone(), Edge { inferred: true, ..edge });
                }
            }
        }
    }
    let mut out = g.clone();
    for (_, mut edge) in derived {
        if let Some(existing) = g.edge(&edge.id) {
            edge.provenance.retain(|p| !existing.provenance.contains(p));
        }
        out.insert_edge(edge).expect("rule endpoints are graph nodes");
    }
    out
}

/// Re-checks every witness stored on an inferred edge against `g` and the
/// rule it names.
pub fn validate_inferred_edge<S: Scalar>(
    g: &KnowledgeGraph<S>,
    edge: &Edge<S>,
    rules: &[InferenceRule<S>],
) -> Result<(), String> {
    if !edge.inferred {
        return Err(format!("edge {} is not marked inferred", edge.id));
    }
    let witnesses: Vec<&Provenance> = edge
        .provenance
        .iter()
        .filter(|p| p.extractor == ExtractorKind::Inferred)
        .collect();
    if witnesses.is_empty() {
        return Err(format!("edge {} has no inference witness", edge.id));
    }
    for prov in witnesses {
        let name = prov.rule.as_deref().ok_or("witness without rule name")?;
        let rule = rules
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| format!("unknown rule `{name}`"))?;
        if rule.inferred_predicate != edge.predicate {
            return Err(format!("rule `{name}` does not produce `{}`", edge.predicate));
        }
        if prov.witness.len() != rule.pattern.len() {
            return Err(format!("witness length {} != pattern length {}", prov.witness.len(), rule.pattern.len()));
        }
        let mut nodes = vec![edge.source.as_str()];
        for (id, predicate) in prov.witness.iter().zip(&rule.pattern) {
            let step = g.edge(id).ok_or_else(|| format!("witness edge {id} missing"))?;
            if step.inferred {
                return Err(format!("witness edge {id} is itself inferred"));
            }
            if &step.predicate != predicate {
                return Err(format!("witness edge {id} has predicate `{}`, expected `{predicate}`", step.predicate));
            }
            if step.source != *nodes.last().expect("non-empty") {
                return Err(format!("witness edge {id} does not continue the path"));
            }
            if nodes.contains(&step.target.as_str()) {
                return Err(format!("witness path repeats node `{}`", step.target));
            }
            nodes.push(&step.target);
        }
        if *nodes.last().expect("non-empty") != edge.target {
            return Err("witness path does not end at the edge target".into());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Node;

    fn chain(edges: &[(&str, &str, &str, f64)]) -> KnowledgeGraph<f64> {
        let mut g = KnowledgeGraph::new();
        for (s, p, o, c) in edges {
            g.insert_node(Node::new(*s)).unwrap();
            g.insert_node(Node::new(*o)).unwrap();
            g.insert_edge(Edge::new(*s, *p, *o, *c)).unwrap();
        }
        g
    }

    fn lineage() -> InferenceRule<f64> {
        InferenceRule::new("lineage", ["mentor", "colleague"], "scientific_lineage", 0.9).unwrap()
    }

    #[test]
    fn curie_meitner_fermi_lineage() {
        let g = chain(&[("curie", "mentor", "meitner", 0.5), ("meitner", "colleague", "fermi", 0.5)]);
        let rules = [lineage()];
        let out = infer_implicit_relations(&g, &rules);
        let inferred: Vec<_> = out.edges().filter(|e| e.inferred).collect();
        assert_eq!(inferred.len(), 1);
        let e = inferred[0];
        assert_eq!(e.triple(), ("curie", "scientific_lineage", "fermi"));
        // 0.5 * 0.5 * 0.9^1
        assert!((e.confidence - 0.225).abs() < 1e-12);
        assert_eq!(e.provenance[0].extractor, ExtractorKind::Inferred);
        validate_inferred_edge(&out, e, &rules).unwrap();
    }

    #[test]
    fn direction_is_respected() {
        let g = chain(&[("meitner", "mentor", "curie", 0.5), ("meitner", "colleague", "fermi", 0.5)]);
        assert_eq!(infer_implicit_relations(&g, &[lineage()]), g);
    }

    #[test]
    fn transitive_part_of() {
        let g = chain(&[("a", "part_of", "b", 1.0), ("b", "part_of", "c", 1.0)]);
        let rule = InferenceRule::new("trans", ["part_of", "part_of"], "part_of", 1.0).unwrap();
        let out = infer_implicit_relations(&g, &[rule]);
        assert!(out.find_edge("a", "part_of", "c").is_some_and(|e| e.inferred));
        assert_eq!(out.edge_count(), 3);
    }

    #[test]
    fn single_pass_does_not_chain() {
        let g = chain(&[("a", "p", "b", 1.0), ("b", "p", "c", 1.0), ("c", "p", "d", 1.0)]);
        let rule = InferenceRule::new("t", ["p", "p"], "p", 1.0).unwrap();
        let out = infer_implicit_relations(&g, &[rule]);
        assert!(out.find_edge("a", "p", "d").is_none());
        assert_eq!(out.edges().filter(|e| e.inferred).count(), 2);
    }

    #[test]
    fn existing_extracted_edge_untouched() {
        let g = chain(&[("a", "p", "b", 0.9), ("b", "p", "c", 0.9), ("a", "p", "c", 0.1)]);
        let rule = InferenceRule::new("t", ["p", "p"], "p", 1.0).unwrap();
        assert_eq!(infer_implicit_relations(&g, &[rule]), g);
    }

    #[test]
    fn duplicate_derivations_keep_max_and_all_witnesses() {
        let g = chain(&[
            ("a", "p", "b", 0.5),
            ("b", "p", "c", 0.5),
            ("a", "p", "x", 0.9),
            ("x", "p", "c", 0.9),
        ]);
        let rule = InferenceRule::new("t", ["p", "p"], "q", 1.0).unwrap();
        let out = infer_implicit_relations(&g, std::slice::from_ref(&rule));
        let e = out.find_edge("a", "q", "c").unwrap();
        assert!((e.confidence - 0.81).abs() < 1e-12);
        assert_eq!(e.provenance.len(), 2);
        validate_inferred_edge(&out, e, &[rule]).unwrap();
    }

    #[test]
    fn cycles_do_not_loop() {
        let g = chain(&[("a", "p", "b", 1.0), ("b", "p", "a", 1.0)]);
        let rule = InferenceRule::new("t", ["p", "p"], "q", 1.0).unwrap();
        // a->b->a revisits a, so no simple path matches.
        assert_eq!(infer_implicit_relations(&g, &[rule]), g);
    }

    #[test]
    fn tampered_witness_fails_validation() {
        let g = chain(&[("curie", "mentor", "meitner", 0.5), ("meitner", "colleague", "fermi", 0.5)]);
        let rules = [lineage()];
        let out = infer_implicit_relations(&g, &rules);
        let mut e = out.find_edge("curie", "scientific_lineage", "fermi").unwrap().clone();
        e.provenance[0].witness.reverse();
        assert!(validate_inferred_edge(&out, &e, &rules).is_err());
    }

    #[test]
    fn rule_validation() {
        assert!(InferenceRule::<f64>::new("r", ["p"], "q", 0.5).is_err());
        assert!(InferenceRule::<f64>::new("r", ["p", "p"], "q", 0.0).is_err());
        assert!(InferenceRule::<f64>::new("r", ["p", "p"], "q", 1.5).is_err());
        let r: InferenceRule<f64> =
            serde_json::from_str(r#"{"name":"l","pattern":["Mentor","colleague"],"inferred_predicate":"x","discount":1}"#)
                .unwrap();
        assert_eq!(r.pattern, ["mentor", "colleague"]);
    }
}
