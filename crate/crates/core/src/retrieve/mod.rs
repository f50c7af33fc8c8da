//! Knowledge retrieval against the graph.
//!
//! 1. [`preprocess_paths`] makes every relation path start at a named
//!    entity and resolves names to graph ids.
//! 2. [`bfs_reasoning_paths`] instantiates a resolved path level by level.
//! 3. [`retrieve_metrics`] collects candidate metrics per metric/component
//!    pair, ranks them with BM25 and lets the model pick.
//! 4. [`retrieve_component_labels`] and [`retrieve_semantic_labels`] find
//!    the label-value pairs the query should filter on.

mod index;
mod labels;
mod metrics;
mod paths;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{Direction, EntityId, EntityKind, Graph, RelationKind, ATTR_METRIC_TYPE};
use crate::llm::LlmError;
use crate::parse::Hop;

pub use index::KnowledgeIndex;
pub use labels::{retrieve_component_labels, retrieve_semantic_labels, semantic_items_from_text, STAGE_LABELS};
pub use metrics::{retrieve_metrics, selection_from_text, MetricRetrieval, STAGE_SELECT};
pub use paths::{bfs_reasoning_paths, preprocess_paths, split_path, BfsOutcome, ResolvedPath, Target, BFS_PATH_CAP};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    /// Metrics kept per metric/component pair after BM25 ranking.
    pub top_k_metrics: usize,
    /// Label-value pairs kept per flagged semantic label.
    pub top_m_label_values: usize,
    /// Cap on candidates shown to the model; `None` means 10 per pair.
    pub max_candidate_metrics_to_llm: Option<usize>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            top_k_metrics: 10,
            top_m_label_values: 1,
            max_candidate_metrics_to_llm: None,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.top_k_metrics == 0 {
            return Err("top_k_metrics must be at least 1".into());
        }
        if self.top_m_label_values == 0 {
            return Err("top_m_label_values must be at least 1".into());
        }
        if self.max_candidate_metrics_to_llm == Some(0) {
            return Err("max_candidate_metrics_to_llm must be at least 1".into());
        }
        Ok(())
    }

    pub fn candidate_cap(&self, pairs: usize) -> usize {
        self.max_candidate_metrics_to_llm.unwrap_or(10 * pairs.max(1))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RetrieveError {
    #[error("start entity {0} is not in the graph")]
    UnknownStart(EntityId),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Where a reasoning path came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Component,
    MetricComponentLabel,
    MetricSemanticLabel,
}

/// A concrete walk through the graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReasoningPath {
    pub start: EntityId,
    pub hops: Vec<(Hop, EntityId)>,
    pub provenance: Provenance,
}

/// `(subject, relation, object)` in the relation's own direction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: EntityId,
    pub relation: RelationKind,
    pub object: EntityId,
}

impl ReasoningPath {
    pub fn new(start: EntityId, provenance: Provenance) -> Self {
        ReasoningPath {
            start,
            hops: Vec::new(),
            provenance,
        }
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityId> {
        std::iter::once(&self.start).chain(self.hops.iter().map(|(_, e)| e))
    }

    pub fn last(&self) -> &EntityId {
        self.hops.last().map(|(_, e)| e).unwrap_or(&self.start)
    }

    pub fn triples(&self) -> Vec<Triple> {
        let mut prev = &self.start;
        let mut out = Vec::with_capacity(self.hops.len());
        for (hop, e) in &self.hops {
            let (subject, object) = match hop.direction {
                Direction::Forward => (prev.clone(), e.clone()),
                Direction::Backward => (e.clone(), prev.clone()),
            };
            out.push(Triple {
                subject,
                relation: hop.relation,
                object,
            });
            prev = e;
        }
        out
    }

    /// Every hop exists in `g`.
    pub fn is_valid_in(&self, g: &Graph) -> bool {
        g.contains(&self.start)
            && self
                .triples()
                .iter()
                .all(|t| g.has_relation(&t.subject, t.relation, &t.object))
    }

    /// `(kind:name)-rel->(kind:name)<-rel-(kind:name)` using graph names.
    pub fn render(&self, g: &Graph) -> String {
        let mut s = format!("({})", g.label(&self.start));
        for (hop, e) in &self.hops {
            match hop.direction {
                Direction::Forward => s.push_str(&format!("-{}->", hop.relation)),
                Direction::Backward => s.push_str(&format!("<-{}-", hop.relation)),
            }
            s.push_str(&format!("({})", g.label(e)));
        }
        s
    }
}

impl Triple {
    pub fn render(&self, g: &Graph) -> String {
        format!(
            "({}) -{}-> ({})",
            g.label(&self.subject),
            self.relation,
            g.label(&self.object)
        )
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) -{}-> ({})", self.subject, self.relation, self.object)
    }
}

/// Triples of all paths, first occurrence order, duplicates removed.
pub fn flatten_triples<'a>(paths: impl IntoIterator<Item = &'a ReasoningPath>) -> Vec<Triple> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in paths {
        for t in p.triples() {
            if seen.insert(t.clone()) {
                out.push(t);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricInfo {
    pub id: EntityId,
    pub name: String,
    pub metric_type: String,
    pub description: String,
}

impl MetricInfo {
    pub fn from_graph(g: &Graph, id: &EntityId) -> Option<Self> {
        let e = g.get(id)?;
        if e.kind != EntityKind::Metric {
            return None;
        }
        Some(MetricInfo {
            id: id.clone(),
            name: e.name.clone(),
            metric_type: e.attr(ATTR_METRIC_TYPE).unwrap_or("unknown").to_string(),
            description: e.description.clone().unwrap_or_default(),
        })
    }
}

/// Everything retrieved for one question.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievedKnowledge {
    pub metrics: Vec<MetricInfo>,
    pub reasoning_paths: Vec<ReasoningPath>,
    pub triples: Vec<Triple>,
}

impl RetrievedKnowledge {
    pub fn new(metrics: Vec<MetricInfo>, reasoning_paths: Vec<ReasoningPath>) -> Self {
        let triples = flatten_triples(&reasoning_paths);
        RetrievedKnowledge {
            metrics,
            reasoning_paths,
            triples,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty() && self.triples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triples_follow_relation_direction() {
        let svc = EntityId::new(EntityKind::Service, "order service");
        let pod = EntityId::new(EntityKind::Pod, "pod1");
        let node = EntityId::new(EntityKind::Node, "node1");
        let p = ReasoningPath {
            start: svc.clone(),
            hops: vec![
                (Hop::forward(RelationKind::Targets), pod.clone()),
                (Hop::backward(RelationKind::Hosts), node.clone()),
            ],
            provenance: Provenance::Component,
        };
        assert_eq!(
            p.triples(),
            vec![
                Triple {
                    subject: svc.clone(),
                    relation: RelationKind::Targets,
                    object: pod.clone()
                },
                Triple {
                    subject: node,
                    relation: RelationKind::Hosts,
                    object: pod
                },
            ]
        );
        let dup = flatten_triples([&p, &p]);
        assert_eq!(dup.len(), 2);
    }

    #[test]
    fn config_defaults() {
        let c = RetrievalConfig::default();
        assert_eq!((c.top_k_metrics, c.top_m_label_values), (10, 1));
        assert_eq!(c.candidate_cap(2), 20);
        assert!(RetrievalConfig {
            top_k_metrics: 0,
            ..c.clone()
        }
        .validate()
        .is_err());
    }
}
