//! System-context knowledge graph and question-to-PromQL pipeline.
//!
//! Module map, in pipeline order:
//!
//! - [`ingest`] turns monitoring/orchestration metadata into a [`Graph`].
//! - [`textindex`] ranks names and descriptions with BM25.
//! - [`parse`] asks the model for relation paths and metric/component pairs.
//! - [`retrieve`] resolves those against the graph.
//! - [`pipeline`] assembles the generation prompt and extracts the query.
//! - [`eval`] scores predictions against gold queries.
//!
//! The model sits behind [`llm::ChatProvider`]; tests use the scripted
//! [`llm::MockProvider`] so every run is reproducible.

pub mod eval;
pub mod golden;
pub mod graph;
pub mod ingest;
pub mod llm;
pub mod parse;
pub mod pipeline;
pub mod prompts;
pub mod retrieve;
pub mod synthetic;
pub mod textindex;

pub use graph::{Direction, Entity, EntityId, EntityKind, Graph, GraphError, Relation, RelationKind};

/// BM25 corpus over `f64` scores.
pub type Corpus = textindex::Corpus<f64>;
pub type Bm25Params = textindex::Bm25Params<f64>;
pub type Hit = textindex::Hit<f64>;
