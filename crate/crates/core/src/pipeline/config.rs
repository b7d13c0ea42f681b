use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::aggregation::{NormalizationPolicy, DEFAULT_BASE_CONFIDENCE};
use crate::client::CompletionParams;
use crate::evaluation::MatchPolicy;
use crate::extraction::DEFAULT_MAX_CHUNK_CHARS;
use crate::graph::GraphFormat;
use crate::topology::TopologyConfig;

/// Where triples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorChoice {
    /// Chat-completion endpoint configured through the environment.
    Model,
    /// Deterministic pattern rules, no model involved.
    #[default]
    Pattern,
    /// Recorded model answers keyed by prompt hash.
    Fixture,
}

/// One JSON file describing a run. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub extractor: ExtractorChoice,
    pub include_context: bool,
    pub topology_enabled: bool,
    pub normalization: NormalizationPolicy,
    pub topology: TopologyConfig<f64>,
    pub model: CompletionParams,
    pub worker_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub senses: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
    pub match_policy: MatchPolicy,
    pub export_format: GraphFormat,
    /// Edges below this confidence are left out of the exported graph.
    pub confidence_threshold: f64,
    pub max_chunk_chars: usize,
    pub base_confidence: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            extractor: ExtractorChoice::default(),
            include_context: true,
            topology_enabled: true,
            normalization: NormalizationPolicy::default(),
            topology: TopologyConfig::default(),
            model: CompletionParams::default(),
            worker_count: 1,
            rules: None,
            senses: None,
            gold: None,
            fixtures: None,
            match_policy: MatchPolicy::default(),
            export_format: GraphFormat::default(),
            confidence_threshold: 0.0,
            max_chunk_chars: DEFAULT_MAX_CHUNK_CHARS,
            base_confidence: DEFAULT_BASE_CONFIDENCE,
        }
    }
}

fn config_error(reason: impl Into<String>) -> PipelineError {
    PipelineError::Config(reason.into())
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let mut config: PipelineConfig = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.topology.enabled = config.topology_enabled;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text).map_err(|e| match e {
            PipelineError::Config(reason) => config_error(format!("{}: {reason}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.rules, &mut config.senses, &mut config.gold, &mut config.fixtures]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(config_error(format!(
                "confidence_threshold {} outside [0, 1]",
                self.confidence_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.base_confidence) {
            return Err(config_error(format!("base_confidence {} outside [0, 1]", self.base_confidence)));
        }
        if self.worker_count == 0 {
            return Err(config_error("worker_count must be at least 1"));
        }
        if self.max_chunk_chars == 0 {
            return Err(config_error("max_chunk_chars must be at least 1"));
        }
        if self.extractor == ExtractorChoice::Fixture && self.fixtures.is_none() {
            return Err(config_error("extractor `fixture` needs a `fixtures` file"));
        }
        self.topology.validate().map_err(|e| config_error(e.to_string()))?;
        self.model.validate().map_err(|e| config_error(e.to_string()))
    }

    /// Fails when a referenced file is missing.
    pub fn check_files(&self) -> Result<(), PipelineError> {
        let named = [
            ("rules", &self.rules),
            ("senses", &self.senses),
            ("gold", &self.gold),
            ("fixtures", &self.fixtures),
        ];
        for (name, path) in named {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(config_error(format!("{name} file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    /// Copy with topology switched on or off consistently.
    pub fn with_topology(mut self, enabled: bool) -> Self {
        self.topology_enabled = enabled;
        self.topology.enabled = enabled;
        self
    }
}
