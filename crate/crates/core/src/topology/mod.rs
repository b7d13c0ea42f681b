//! Structural scoring and inference over a knowledge graph.
//!
//! Paths are found with a bidirectional BFS that breaks ties towards the
//! lexicographically smallest node sequence, so every result here is
//! deterministic.

mod adjacency;
mod confidence;
mod discover;
mod paths;
mod rules;
mod senses;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::EdgeId;
use crate::scalar::Scalar;

pub use confidence::{degree_centrality, edge_supports, noisy_or, path_weight, reinforce_confidence};
pub use discover::{discover, DiscoveryReport, SenseTable, StepError};
pub use paths::{bidirectional_bfs, edge_disjoint_paths, PathEvidence};
pub use rules::{infer_implicit_relations, validate_inferred_edge, InferenceRule};
pub use senses::{disambiguate_entity, neighbourhood, rank_senses, SenseScore, SenseSignature, SENSE_ATTRIBUTE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("source and target are the same node `{0}`")]
    SameEndpoints(String),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("invalid rule `{name}`: {reason}")]
    InvalidRule { name: String, reason: String },
    #[error("invalid sense: {0}")]
    InvalidSense(String),
    #[error("invalid topology config: {0}")]
    InvalidConfig(String),
}

/// Free parameters of structural scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigFields<S>", bound = "S: Scalar")]
pub struct TopologyConfig<S> {
    pub max_path_length: usize,
    pub base_path_weight: S,
    pub direct_edge_weight: S,
    pub undirected_paths: bool,
    pub confidence_floor: S,
    pub confidence_ceiling: S,
    pub disambiguation_radius: usize,
    /// When false, [`discover`] returns its input unchanged. The pipeline
    /// sets this from its own `topology_enabled` switch.
    #[serde(skip)]
    pub enabled: bool,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
struct ConfigFields<S> {
    max_path_length: usize,
    base_path_weight: S,
    direct_edge_weight: S,
    undirected_paths: bool,
    confidence_floor: S,
    confidence_ceiling: S,
    disambiguation_radius: usize,
}

impl<S: Scalar> Default for ConfigFields<S> {
    fn default() -> Self {
        let d = TopologyConfig::<S>::default();
        Self {
            max_path_length: d.max_path_length,
            base_path_weight: d.base_path_weight,
            direct_edge_weight: d.direct_edge_weight,
            undirected_paths: d.undirected_paths,
            confidence_floor: d.confidence_floor,
            confidence_ceiling: d.confidence_ceiling,
            disambiguation_radius: d.disambiguation_radius,
        }
    }
}

impl<S: Scalar> TryFrom<ConfigFields<S>> for TopologyConfig<S> {
    type Error = TopologyError;

    fn try_from(f: ConfigFields<S>) -> Result<Self, Self::Error> {
        let config = TopologyConfig {
            max_path_length: f.max_path_length,
            base_path_weight: f.base_path_weight,
            direct_edge_weight: f.direct_edge_weight,
            undirected_paths: f.undirected_paths,
            confidence_floor: f.confidence_floor,
            confidence_ceiling: f.confidence_ceiling,
            disambiguation_radius: f.disambiguation_radius,
            enabled: true,
        };
        config.validate()?;
        Ok(config)
    }
}

impl<S: Scalar> Default for TopologyConfig<S> {
    fn default() -> Self {
        Self {
            max_path_length: 4,
            base_path_weight: S::lit(0.7),
            direct_edge_weight: S::lit(0.5),
            undirected_paths: true,
            confidence_floor: S::zero(),
            confidence_ceiling: S::one(),
            disambiguation_radius: 1,
            enabled: true,
        }
    }
}

impl<S: Scalar> TopologyConfig<S> {
    pub fn validate(&self) -> Result<(), TopologyError> {
        let open_unit = |v: S| v > S::zero() && v < S::one();
        let bad = |msg: String| Err(TopologyError::InvalidConfig(msg));
        if self.max_path_length < 2 {
            return bad(format!("max_path_length must be at least 2, got {}", self.max_path_length));
        }
        if !open_unit(self.base_path_weight) {
            return bad(format!("base_path_weight {} outside (0, 1)", self.base_path_weight));
        }
        if !open_unit(self.direct_edge_weight) {
            return bad(format!("direct_edge_weight {} outside (0, 1)", self.direct_edge_weight));
        }
        if !(self.confidence_floor.in_unit_interval()
            && self.confidence_ceiling.in_unit_interval()
            && self.confidence_floor <= self.confidence_ceiling)
        {
            return bad(format!(
                "confidence clamps [{}, {}] are not an interval inside [0, 1]",
                self.confidence_floor, self.confidence_ceiling
            ));
        }
        Ok(())
    }

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }
}
