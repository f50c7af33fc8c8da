use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{Direction, EntityId, EntityKind, Graph, RelationKind};
use crate::llm::{LlmError, Session};
use crate::parse::{ComponentScope, MetricComponentPair};
use crate::prompts;

use super::{KnowledgeIndex, MetricInfo, RetrievalConfig};

pub const STAGE_SELECT: &str = "select_metrics";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricRetrieval {
    /// Candidates shown to the model, in prompt order.
    pub candidates: Vec<EntityId>,
    /// The model's pick, restricted to the candidates.
    pub selected: Vec<EntityId>,
    pub diagnostics: Vec<String>,
}

/// Metrics two hops away (label-value pair, then metric) from any entity
/// of `kind`.
fn metrics_near_kind(g: &Graph, kind: EntityKind) -> BTreeSet<EntityId> {
    let mut out = BTreeSet::new();
    for e in g.entities_of_kind(kind) {
        let lvps = g
            .neighbors(e, RelationKind::Identifies, Direction::Backward)
            .expect("entity from graph");
        for lvp in lvps {
            let ms = g
                .neighbors(lvp, RelationKind::HasLabel, Direction::Backward)
                .expect("entity from graph");
            out.extend(ms.iter().cloned());
        }
    }
    out
}

fn candidate_pool(g: &Graph, scope: ComponentScope) -> BTreeSet<EntityId> {
    match scope {
        ComponentScope::Kind(kind) => metrics_near_kind(g, kind),
        // Every metric hangs off some component kind or has no component
        // labels at all; either way ALL reaches it.
        ComponentScope::All => g.entities_of_kind(EntityKind::Metric).clone(),
    }
}

/// Names from a model reply that are among `candidates`, in reply order.
///
/// When the reply has a `selected:` line only the last such line counts;
/// otherwise every identifier in the reply is considered.
pub fn selection_from_text(text: &str, candidates: &[String]) -> Vec<String> {
    let scope = text
        .lines()
        .rev()
        .find_map(|l| {
            let t = l.trim();
            t.get(..9).filter(|p| p.eq_ignore_ascii_case("selected:")).map(|_| &t[9..])
        })
        .unwrap_or(text);
    let mut out: Vec<String> = Vec::new();
    for tok in scope.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == ':')) {
        let tok = tok.trim_matches(':');
        if candidates.iter().any(|c| c == tok) && !out.iter().any(|o| o == tok) {
            out.push(tok.to_string());
        }
    }
    out
}

fn candidate_lines(g: &Graph, ids: &[EntityId]) -> String {
    ids.iter()
        .filter_map(|id| MetricInfo::from_graph(g, id))
        .map(|m| format!("{} | {} | {}", m.name, m.metric_type, m.description))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Candidate metrics per pair (top `k` by BM25 inside the pair's pool),
/// merged, capped, then narrowed down by the model.
pub fn retrieve_metrics(
    question: &str,
    pairs: &[MetricComponentPair],
    g: &Graph,
    index: &KnowledgeIndex,
    config: &RetrievalConfig,
    session: &mut Session,
) -> Result<MetricRetrieval, LlmError> {
    let mut out = MetricRetrieval::default();
    let mut seen = BTreeSet::new();
    for pair in pairs {
        let pool = candidate_pool(g, pair.component);
        if pool.is_empty() {
            out.diagnostics.push(format!(
                "no metrics reachable for component {} ({:?})",
                pair.component, pair.metric_description
            ));
            continue;
        }
        let top: Vec<EntityId> = index
            .rank_metrics(&pair.metric_description)
            .into_iter()
            .filter(|(id, _)| pool.contains(id))
            .take(config.top_k_metrics)
            .map(|(id, _)| id)
            .collect();
        for id in top {
            if seen.insert(id.clone()) {
                out.candidates.push(id);
            }
        }
    }
    let cap = config.candidate_cap(pairs.len());
    if out.candidates.len() > cap {
        out.diagnostics
            .push(format!("{} candidate metrics, keeping the first {cap}", out.candidates.len()));
        out.candidates.truncate(cap);
    }
    if out.candidates.is_empty() {
        out.diagnostics.push("no candidate metrics".into());
        return Ok(out);
    }

    let prompt = prompts::select_metrics(question, &candidate_lines(g, &out.candidates));
    let reply = session.ask(STAGE_SELECT, prompt)?;
    let names: Vec<String> = out
        .candidates
        .iter()
        .filter_map(|id| g.get(id).map(|e| e.name.clone()))
        .collect();
    let picked = selection_from_text(&reply, &names);
    out.selected = picked
        .iter()
        .map(|n| EntityId::new(EntityKind::Metric, n))
        .filter(|id| out.candidates.contains(id))
        .collect();
    out.diagnostics.push(format!(
        "model selected {} of {} candidate metrics",
        out.selected.len(),
        out.candidates.len()
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_parsing() {
        let cands = vec!["a_total".to_string(), "b_bytes".to_string(), "c".to_string()];
        assert_eq!(
            selection_from_text("I considered c.\nselected: b_bytes, a_total, zzz", &cands),
            ["b_bytes", "a_total"]
        );
        assert_eq!(selection_from_text("use `a_total` and c", &cands), ["a_total", "c"]);
        assert!(selection_from_text("selected: none", &cands).is_empty());
    }
}
