//! Entity and relation F1 against a gold set.
//!
//! Entities match on exact canonical label. Relations match either strictly
//! on `(subject, predicate, object)` or, under
//! [`MatchPolicy::PredicateRelaxed`], on equal endpoints with one predicate a
//! substring of the other. Each gold item is matched at most once; relaxed
//! matching uses a maximum bipartite matching so the count does not depend
//! on iteration order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{normalize_label, NormalizationPolicy};
use crate::graph::{deserialize_graph, GraphError, GraphFormat, KnowledgeGraph};
use crate::scalar::Scalar;

pub type Triple = (String, String, String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchPolicy {
    #[default]
    Strict,
    #[serde(alias = "relaxed")]
    PredicateRelaxed,
}

impl std::str::FromStr for MatchPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::Strict),
            "relaxed" | "predicate_relaxed" => Ok(Self::PredicateRelaxed),
            other => Err(format!("unknown match policy `{other}` (expected strict or relaxed)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{file}:{line}: {reason}")]
    Parse { file: PathBuf, line: usize, reason: String },
    #[error("{file}: {source}")]
    Graph { file: PathBuf, source: GraphError },
    #[error("{file}: {source}")]
    Io { file: PathBuf, source: std::io::Error },
}

impl EvalError {
    pub fn file(&self) -> &Path {
        match self {
            EvalError::Parse { file, .. } | EvalError::Graph { file, .. } | EvalError::Io { file, .. } => file,
        }
    }
}

/// Gold entities and triples, stored in canonical form. Triple endpoints
/// are always present in `entities`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldSet {
    entities: BTreeSet<String>,
    triples: BTreeSet<Triple>,
}

#[derive(Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum GoldLine {
    Triple { subject: String, predicate: String, object: String },
    Entity { entity: String },
}

impl GoldSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entity(&mut self, label: &str, policy: &NormalizationPolicy) -> Result<(), String> {
        let label = normalize_label(label, policy).map_err(|e| e.to_string())?;
        self.entities.insert(label);
        Ok(())
    }

    pub fn add_triple(&mut self, s: &str, p: &str, o: &str, policy: &NormalizationPolicy) -> Result<(), String> {
        let norm = |x: &str| normalize_label(x, policy).map_err(|e| e.to_string());
        let (s, p, o) = (norm(s)?, norm(p)?, norm(o)?);
        self.entities.insert(s.clone());
        self.entities.insert(o.clone());
        self.triples.insert((s, p, o));
        Ok(())
    }

    /// Parses gold JSONL. Blank lines are skipped; errors report the
    /// 1-based line number.
    pub fn from_jsonl(text: &str, file: &Path, policy: &NormalizationPolicy) -> Result<Self, EvalError> {
        let mut gold = GoldSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fail = |reason: String| EvalError::Parse {
                file: file.to_path_buf(),
                line: i + 1,
                reason,
            };
            let parsed: GoldLine = serde_json::from_str(line).map_err(|_| {
                fail("expected {\"subject\",\"predicate\",\"object\"} or {\"entity\"}".into())
            })?;
            match parsed {
                GoldLine::Triple { subject, predicate, object } => {
                    gold.add_triple(&subject, &predicate, &object, policy).map_err(fail)?
                }
                GoldLine::Entity { entity } => gold.add_entity(&entity, policy).map_err(fail)?,
            }
        }
        Ok(gold)
    }

    pub fn load(path: &Path, policy: &NormalizationPolicy) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            file: path.to_path_buf(),
            source,
        })?;
        Self::from_jsonl(&text, path, policy)
    }

    /// Gold set that a graph matches perfectly: its nodes and extracted
    /// edges.
    pub fn of_graph<S: Scalar>(g: &KnowledgeGraph<S>) -> Self {
        Self {
            entities: g.node_ids().map(str::to_string).collect(),
            triples: predicted_triples(g, false),
        }
    }

    pub fn entities(&self) -> &BTreeSet<String> {
        &self.entities
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut covered = BTreeSet::new();
        for (s, p, o) in &self.triples {
            covered.insert(s);
            covered.insert(o);
            out.push_str(&serde_json::json!({"subject": s, "predicate": p, "object": o}).to_string());
            out.push('\n');
        }
        for e in self.entities.iter().filter(|e| !covered.contains(e)) {
            out.push_str(&serde_json::json!({ "entity": e }).to_string());
            out.push('\n');
        }
        out
    }
}

/// Precision, recall and F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores<T> {
    pub p: T,
    pub r: T,
    pub f1: T,
}

impl<T: Num + FromPrimitive + Copy> Scores<T> {
    /// Empty denominators give 0.
    pub fn from_counts(matched: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |n: usize, d: usize| {
            if d == 0 {
                T::zero()
            } else {
                T::from_usize(n).expect("count fits") / T::from_usize(d).expect("count fits")
            }
        };
        let p = ratio(matched, predicted);
        let r = ratio(matched, gold);
        let two = T::one() + T::one();
        let f1 = if p + r == T::zero() { T::zero() } else { two * p * r / (p + r) };
        Scores { p, r, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalItem {
    Entity { label: String },
    Relation { subject: String, predicate: String, object: String },
}

impl EvalItem {
    fn relation((s, p, o): &Triple) -> Self {
        EvalItem::Relation {
            subject: s.clone(),
            predicate: p.clone(),
            object: o.clone(),
        }
    }
}

impl fmt::Display for EvalItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalItem::Entity { label } => write!(f, "{label}"),
            EvalItem::Relation { subject, predicate, object } => write!(f, "({subject} | {predicate} | {object})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub predicted: EvalItem,
    pub gold: EvalItem,
}

/// Scores plus the items behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric<T> {
    pub scores: Scores<T>,
    pub matched: Vec<MatchedPair>,
    pub missing: Vec<EvalItem>,
    pub spurious: Vec<EvalItem>,
}

pub fn entity_f1<S: Scalar, T: Num + FromPrimitive + Copy>(g: &KnowledgeGraph<S>, gold: &GoldSet) -> Metric<T> {
    let predicted: BTreeSet<&str> = g.node_ids().collect();
    let entity = |l: &str| EvalItem::Entity { label: l.to_string() };
    let matched: Vec<MatchedPair> = predicted
        .iter()
        .filter(|l| gold.entities.contains(**l))
        .map(|l| MatchedPair {
            predicted: entity(l),
            gold: entity(l),
        })
        .collect();
    Metric {
        scores: Scores::from_counts(matched.len(), predicted.len(), gold.entities.len()),
        missing: gold
            .entities
            .iter()
            .filter(|l| !predicted.contains(l.as_str()))
            .map(|l| entity(l))
            .collect(),
        spurious: predicted
            .iter()
            .filter(|l| !gold.entities.contains(**l))
            .map(|l| entity(l))
            .collect(),
        matched,
    }
}

/// Predicted relation triples. Inferred edges are left out unless
/// `include_inferred` is set.
pub fn predicted_triples<S: Scalar>(g: &KnowledgeGraph<S>, include_inferred: bool) -> BTreeSet<Triple> {
    g.edges()
        .filter(|e| include_inferred || !e.inferred)
        .map(|e| (e.source.clone(), e.predicate.clone(), e.target.clone()))
        .collect()
}

fn relation_matches(policy: MatchPolicy, pred: &Triple, gold: &Triple) -> bool {
    if pred.0 != gold.0 || pred.2 != gold.2 {
        return false;
    }
    match policy {
        MatchPolicy::Strict => pred.1 == gold.1,
        MatchPolicy::PredicateRelaxed => pred.1.contains(gold.1.as_str()) || gold.1.contains(pred.1.as_str()),
    }
}

/// Maximum bipartite matching (augmenting paths). Returns, for each left
/// vertex, the matched right vertex.
fn max_matching(candidates: &[Vec<usize>], right_count: usize) -> Vec<Option<usize>> {
    fn augment(u: usize, candidates: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &candidates[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, candidates, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner: Vec<Option<usize>> = vec![None; right_count];
    for u in 0..candidates.len() {
        let mut seen = vec![false; right_count];
        augment(u, candidates, &mut seen, &mut owner);
    }
    let mut assignment = vec![None; candidates.len()];
    for (v, u) in owner.iter().enumerate() {
        if let Some(u) = u {
            assignment[*u] = Some(v);
        }
    }
    assignment
}

pub fn relation_f1<S: Scalar, T: Num + FromPrimitive + Copy>(
    g: &KnowledgeGraph<S>,
    gold: &GoldSet,
    policy: MatchPolicy,
    include_inferred: bool,
) -> Metric<T> {
    let predicted: Vec<Triple> = predicted_triples(g, include_inferred).into_iter().collect();
    let gold_list: Vec<&Triple> = gold.triples.iter().collect();

    // Candidate lists are small in practice: only gold triples with the same
    // endpoints can match.
    let mut by_endpoints: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (j, t) in gold_list.iter().enumerate() {
        by_endpoints.entry((&t.0, &t.2)).or_default().push(j);
    }
    let candidates: Vec<Vec<usize>> = predicted
        .iter()
        .map(|t| {
            by_endpoints
                .get(&(t.0.as_str(), t.2.as_str()))
                .map(|js| js.iter().copied().filter(|&j| relation_matches(policy, t, gold_list[j])).collect())
                .unwrap_or_default()
        })
        .collect();
    let assignment = max_matching(&candidates, gold_list.len());

    let mut gold_used = vec![false; gold_list.len()];
    let mut matched = Vec::new();
    let mut spurious = Vec::new();
    for (t, a) in predicted.iter().zip(&assignment) {
        match a {
            Some(j) => {
                gold_used[*j] = true;
                matched.push(MatchedPair {
                    predicted: EvalItem::relation(t),
                    gold: EvalItem::relation(gold_list[*j]),
                });
            }
            None => spurious.push(EvalItem::relation(t)),
        }
    }
    let missing = gold_list
        .iter()
        .zip(&gold_used)
        .filter(|(_, used)| !**used)
        .map(|(t, _)| EvalItem::relation(t))
        .collect();
    Metric {
        scores: Scores::from_counts(matched.len(), predicted.len(), gold_list.len()),
        matched,
        missing,
        spurious,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct EvalReport<S> {
    pub entity: Scores<S>,
    pub relation: Scores<S>,
    pub matched: Vec<MatchedPair>,
    pub missing: Vec<EvalItem>,
    pub spurious: Vec<EvalItem>,
}

impl<S: Scalar> EvalReport<S> {
    pub fn new(entity: Metric<S>, relation: Metric<S>) -> Self {
        let mut matched = entity.matched;
        matched.extend(relation.matched);
        let mut missing = entity.missing;
        missing.extend(relation.missing);
        let mut spurious = entity.spurious;
        spurious.extend(relation.spurious);
        Self {
            entity: entity.scores,
            relation: relation.scores,
            matched,
            missing,
            spurious,
        }
    }

    /// Plain-text summary table.
    pub fn render_table(&self) -> String {
        let count = |items: &[EvalItem], relation: bool| {
            items
                .iter()
                .filter(|i| matches!(i, EvalItem::Relation { .. }) == relation)
                .count()
        };
        let matched_count = |relation: bool| {
            self.matched
                .iter()
                .filter(|m| matches!(m.gold, EvalItem::Relation { .. }) == relation)
                .count()
        };
        let mut out = format!(
            "{:<10} {:>9} {:>9} {:>9} {:>8} {:>8} {:>9}\n",
            "metric", "precision", "recall", "f1", "matched", "missing", "spurious"
        );
        for (name, scores, relation) in [("entity", &self.entity, false), ("relation", &self.relation, true)] {
            out.push_str(&format!(
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8} {:>8} {:>9}\n",
                name,
                scores.p,
                scores.r,
                scores.f1,
                matched_count(relation),
                count(&self.missing, relation),
                count(&self.spurious, relation)
            ));
        }
        out
    }
}

/// Both metrics for one graph.
pub fn evaluate<S: Scalar>(
    g: &KnowledgeGraph<S>,
    gold: &GoldSet,
    policy: MatchPolicy,
    include_inferred: bool,
) -> EvalReport<S> {
    EvalReport::new(entity_f1(g, gold), relation_f1(g, gold, policy, include_inferred))
}

/// Loads a graph (format from the file extension, JSON by default) and a
/// gold file and evaluates one against the other.
pub fn evaluate_run(
    predicted_graph_path: &Path,
    gold_path: &Path,
    policy: MatchPolicy,
    include_inferred: bool,
    normalization: &NormalizationPolicy,
) -> Result<EvalReport<f64>, EvalError> {
    let bytes = fs::read(predicted_graph_path).map_err(|source| EvalError::Io {
        file: predicted_graph_path.to_path_buf(),
        source,
    })?;
    let format = match predicted_graph_path.extension().and_then(|e| e.to_str()) {
        Some("graphml") | Some("xml") => GraphFormat::GraphMl,
        _ => GraphFormat::Json,
    };
    let g: KnowledgeGraph<f64> = deserialize_graph(&bytes, format).map_err(|source| EvalError::Graph {
        file: predicted_graph_path.to_path_buf(),
        source,
    })?;
    let gold = GoldSet::load(gold_path, normalization)?;
    Ok(evaluate(&g, &gold, policy, include_inferred))
}
