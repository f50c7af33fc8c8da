use std::collections::BTreeMap;

use crate::graph::{EntityId, EntityKind, Graph};
use crate::textindex::{Bm25Params, Corpus};

/// BM25 corpora derived from a graph: entity names per component kind, and
/// metric name + help text.
#[derive(Debug, Clone)]
pub struct KnowledgeIndex {
    names: BTreeMap<EntityKind, Corpus<f64>>,
    metrics: Corpus<f64>,
}

impl KnowledgeIndex {
    pub fn build(g: &Graph) -> Self {
        let mut names = BTreeMap::new();
        for kind in EntityKind::COMPONENTS {
            let docs = g
                .entities_of_kind(kind)
                .iter()
                .filter_map(|id| g.get(id))
                .map(|e| (e.id.as_str().to_string(), e.name.clone()));
            let corpus = Corpus::build(kind.slug(), docs, Bm25Params::default()).expect("entity ids are unique");
            names.insert(kind, corpus);
        }
        let docs = g
            .entities_of_kind(EntityKind::Metric)
            .iter()
            .filter_map(|id| g.get(id))
            .map(|e| {
                let text = match &e.description {
                    Some(d) => format!("{} {}", e.name, d),
                    None => e.name.clone(),
                };
                (e.id.as_str().to_string(), text)
            });
        let metrics = Corpus::build("metrics", docs, Bm25Params::default()).expect("entity ids are unique");
        KnowledgeIndex { names, metrics }
    }

    pub fn names(&self, kind: EntityKind) -> Option<&Corpus<f64>> {
        self.names.get(&kind)
    }

    pub fn metrics(&self) -> &Corpus<f64> {
        &self.metrics
    }

    /// Maps a name from the question to a graph entity of `kind`: an exact
    /// case-insensitive name match wins, otherwise the BM25 top hit.
    pub fn resolve_name(&self, g: &Graph, kind: EntityKind, name: &str) -> Option<EntityId> {
        let wanted = name.trim();
        let exact = g
            .entities_of_kind(kind)
            .iter()
            .filter_map(|id| g.get(id))
            .find(|e| e.name.eq_ignore_ascii_case(wanted));
        if let Some(e) = exact {
            return Some(e.id.clone());
        }
        let hit = self.names.get(&kind)?.rank(wanted, 1).into_iter().next()?;
        Some(EntityId::from_raw(hit.doc))
    }

    /// Metric ids ranked against a description, best first.
    pub fn rank_metrics(&self, description: &str) -> Vec<(EntityId, f64)> {
        self.metrics
            .rank(description, usize::MAX)
            .into_iter()
            .map(|h| (EntityId::from_raw(h.doc), h.score))
            .collect()
    }
}
