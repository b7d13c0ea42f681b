//! Knowledge graph construction from text with small language models.
//!
//! The crate is organised as a pipeline:
//!
//! * [`extraction`] turns text chunks into context-annotated triples, either
//!   through a chat-completion model ([`client`]) or a deterministic pattern
//!   extractor;
//! * [`aggregation`] folds triples into one [`graph::KnowledgeGraph`] with
//!   canonical labels and coexisting attribute values;
//! * [`topology`] scores edges by edge-disjoint supporting paths,
//!   disambiguates entities by neighbourhood and derives implicit relations
//!   from predicate-path rules;
//! * [`evaluation`] computes entity and relation F1 against gold triples;
//! * [`pipeline`] wires the stages together behind a JSON config.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which the pipeline and CLI use.

pub mod aggregation;
pub mod client;
pub mod evaluation;
pub mod extraction;
pub mod graph;
pub mod pipeline;
pub mod scalar;
pub mod topology;

pub use scalar::Scalar;

pub type Graph = graph::KnowledgeGraph<f64>;
pub type Graph32 = graph::KnowledgeGraph<f32>;
pub type GraphEdge = graph::Edge<f64>;

pub type Topology = topology::TopologyConfig<f64>;
pub type Rule = topology::InferenceRule<f64>;
pub type Report = evaluation::EvalReport<f64>;
