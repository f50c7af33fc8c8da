use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{Direction, EntityId, EntityKind, Graph, RelationKind, ATTR_LABEL, ATTR_VALUE};
use crate::llm::{LlmError, Session};
use crate::parse::Hop;
use crate::prompts;
use crate::textindex::{Bm25Params, Corpus};

use super::{MetricInfo, Provenance, ReasoningPath, RetrievalConfig};

pub const STAGE_LABELS: &str = "semantic_labels";

/// Values shown per label in the prompt.
const EXAMPLE_VALUES: usize = 5;

fn lvps_of(g: &Graph, metric: &EntityId) -> Vec<EntityId> {
    g.neighbors(metric, RelationKind::HasLabel, Direction::Forward)
        .map(|s| s.iter().cloned().collect())
        .unwrap_or_default()
}

/// `metric -> label-value pair -> component` for every component that
/// occurs in `paths`.
pub fn retrieve_component_labels(metrics: &[EntityId], paths: &[ReasoningPath], g: &Graph) -> Vec<ReasoningPath> {
    let components: BTreeSet<&EntityId> = paths.iter().flat_map(|p| p.entities()).collect();
    let mut out = Vec::new();
    for m in metrics {
        for lvp in lvps_of(g, m) {
            let targets = g
                .neighbors(&lvp, RelationKind::Identifies, Direction::Forward)
                .expect("entity from graph");
            for c in targets {
                if components.contains(c) {
                    out.push(ReasoningPath {
                        start: m.clone(),
                        hops: vec![
                            (Hop::forward(RelationKind::HasLabel), lvp.clone()),
                            (Hop::forward(RelationKind::Identifies), c.clone()),
                        ],
                        provenance: Provenance::MetricComponentLabel,
                    });
                }
            }
        }
    }
    out
}

/// Semantic labels of a metric: label names none of whose values identify
/// a component. Maps label name to its value entities.
fn semantic_labels(g: &Graph, metric: &EntityId) -> BTreeMap<String, Vec<EntityId>> {
    let mut by_label: BTreeMap<String, Vec<EntityId>> = BTreeMap::new();
    let mut component_labels = BTreeSet::new();
    for lvp in lvps_of(g, metric) {
        let Some(e) = g.get(&lvp) else { continue };
        let label = e.attr(ATTR_LABEL).unwrap_or_default().to_string();
        let linked = !g
            .neighbors(&lvp, RelationKind::Identifies, Direction::Forward)
            .expect("entity from graph")
            .is_empty();
        if linked {
            component_labels.insert(label.clone());
        }
        by_label.entry(label).or_default().push(lvp);
    }
    by_label.retain(|l, _| !component_labels.contains(l));
    by_label
}

/// `label: <name> | values: <description>` lines from a model reply.
pub fn semantic_items_from_text(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for line in text.lines() {
        let t = line.trim().trim_start_matches(['-', '*', ' ']);
        let Some(head) = t.get(..6) else { continue };
        if !head.eq_ignore_ascii_case("label:") {
            continue;
        }
        let rest = &t[6..];
        let (label, values) = match rest.split_once('|') {
            Some((l, v)) => {
                let v = v.trim();
                let v = match v.get(..7) {
                    Some(p) if p.eq_ignore_ascii_case("values:") => &v[7..],
                    _ => v,
                };
                (l.trim(), v.trim())
            }
            None => (rest.trim(), ""),
        };
        if !label.is_empty() && !values.is_empty() {
            out.push((label.trim_matches('`').to_string(), values.to_string()));
        }
    }
    out
}

fn value_of(g: &Graph, id: &EntityId) -> String {
    g.get(id).and_then(|e| e.attr(ATTR_VALUE)).unwrap_or_default().to_string()
}

fn label_lines(g: &Graph, labels: &BTreeMap<String, Vec<EntityId>>) -> String {
    labels
        .iter()
        .map(|(label, ids)| {
            let mut values: Vec<String> = ids.iter().map(|id| value_of(g, id)).collect();
            values.sort();
            let total = values.len();
            values.truncate(EXAMPLE_VALUES);
            let more = if total > EXAMPLE_VALUES {
                format!(" ... ({total} values)")
            } else {
                String::new()
            };
            format!("{label}: {}{more}", values.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// For each metric with semantic labels, asks the model which labels the
/// question needs and which values it wants, then keeps the top-`m` BM25
/// matches among that label's values. Metrics without semantic labels cost
/// no model call.
pub fn retrieve_semantic_labels(
    metrics: &[EntityId],
    question: &str,
    g: &Graph,
    config: &RetrievalConfig,
    session: &mut Session,
) -> Result<(Vec<ReasoningPath>, Vec<String>), LlmError> {
    let mut out = Vec::new();
    let mut notes = Vec::new();
    for m in metrics {
        let Some(info) = MetricInfo::from_graph(g, m) else { continue };
        let labels = semantic_labels(g, m);
        if labels.is_empty() {
            continue;
        }
        let prompt = prompts::semantic_labels(
            question,
            &info.name,
            &info.metric_type,
            &info.description,
            &label_lines(g, &labels),
        );
        let reply = session.ask(STAGE_LABELS, prompt)?;
        for (label, wanted) in semantic_items_from_text(&reply) {
            let Some(ids) = labels.get(&label) else {
                notes.push(format!("{}: ignoring unknown label {label:?}", info.name));
                continue;
            };
            let docs = ids.iter().map(|id| {
                let e = g.get(id).expect("entity from graph");
                let text = match &e.description {
                    Some(d) => format!("{} {d}", value_of(g, id)),
                    None => value_of(g, id),
                };
                (id.as_str().to_string(), text)
            });
            let corpus: Corpus<f64> = Corpus::build(label.clone(), docs, Bm25Params::default()).expect("ids unique");
            let hits = corpus.rank(&wanted, config.top_m_label_values);
            if hits.is_empty() {
                notes.push(format!("{}: no value of {label} matches {wanted:?}", info.name));
            }
            for h in hits {
                out.push(ReasoningPath {
                    start: m.clone(),
                    hops: vec![(Hop::forward(RelationKind::HasLabel), EntityId::from_raw(h.doc))],
                    provenance: Provenance::MetricSemanticLabel,
                });
            }
        }
    }
    debug_assert!(out
        .iter()
        .all(|p| g.get(p.last()).is_some_and(|e| e.kind == EntityKind::LabelValuePair)));
    Ok((out, notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn items() {
        let text = "Reasoning...\nlabel: method | values: POST requests\n- label: `status` | values: server errors 500\nlabel: empty |\nnone";
        assert_eq!(
            semantic_items_from_text(text),
            vec![
                ("method".to_string(), "POST requests".to_string()),
                ("status".to_string(), "server errors 500".to_string())
            ]
        );
    }
}
