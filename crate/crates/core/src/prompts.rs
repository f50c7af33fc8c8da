//! Prompt text. The fixed wording and worked examples live in
//! `assets/prompts/*.txt`; this module only fills their `{{slots}}`.

use std::collections::BTreeMap;

use crate::graph::{EntityKind, RelationKind};
use crate::llm::template::render;

pub const EXTRACT_PATHS: &str = include_str!("../assets/prompts/extract_paths.txt");
pub const EXTRACT_PAIRS: &str = include_str!("../assets/prompts/extract_pairs.txt");
pub const SELECT_METRICS: &str = include_str!("../assets/prompts/select_metrics.txt");
pub const SEMANTIC_LABELS: &str = include_str!("../assets/prompts/semantic_labels.txt");
pub const GENERATE_EXAMPLES: &str = include_str!("../assets/prompts/generate_examples.txt");
pub const GENERATE_INSTRUCTION: &str = include_str!("../assets/prompts/generate_instruction.txt");

fn fill(template: &str, slots: &[(&'static str, String)]) -> String {
    let map: BTreeMap<&str, String> = slots.iter().cloned().collect();
    // Templates are compiled in and covered by tests, so a missing slot is a
    // programming error rather than a runtime condition.
    render(template, &map).expect("prompt template slots are complete")
}

fn component_kinds() -> String {
    EntityKind::COMPONENTS.iter().map(|k| k.slug()).collect::<Vec<_>>().join(", ")
}

/// Relation signatures between component kinds, one per line.
pub fn schema_description() -> String {
    let mut lines = Vec::new();
    for rel in RelationKind::ALL {
        for &(src, dst) in rel.signature() {
            if src.is_component() && dst.is_component() {
                lines.push(format!("{} -{}-> {}", src.slug(), rel, dst.slug()));
            }
        }
    }
    lines.join("\n")
}

pub fn extract_paths(question: &str) -> String {
    fill(
        EXTRACT_PATHS,
        &[
            ("kinds", component_kinds()),
            ("schema", schema_description()),
            ("question", question.trim().to_string()),
        ],
    )
}

pub fn extract_pairs(question: &str) -> String {
    fill(
        EXTRACT_PAIRS,
        &[("kinds", component_kinds()), ("question", question.trim().to_string())],
    )
}

pub fn select_metrics(question: &str, candidates: &str) -> String {
    fill(
        SELECT_METRICS,
        &[
            ("candidates", candidates.to_string()),
            ("question", question.trim().to_string()),
        ],
    )
}

pub fn semantic_labels(question: &str, metric: &str, metric_type: &str, description: &str, labels: &str) -> String {
    fill(
        SEMANTIC_LABELS,
        &[
            ("metric", metric.to_string()),
            ("metric_type", metric_type.to_string()),
            ("description", description.to_string()),
            ("labels", labels.to_string()),
            ("question", question.trim().to_string()),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::template::slots;

    #[test]
    fn every_template_renders() {
        let q = "Which node has the most available memory?";
        for p in [
            extract_paths(q),
            extract_pairs(q),
            select_metrics(q, "m | gauge | d"),
            semantic_labels(q, "m", "gauge", "d", "a: x"),
        ] {
            assert!(p.contains(q));
            assert!(!p.contains("{{"));
        }
        assert!(slots(GENERATE_EXAMPLES).is_empty());
        assert!(slots(GENERATE_INSTRUCTION).is_empty());
    }

    #[test]
    fn schema_mentions_every_relation() {
        let s = schema_description();
        assert!(s.contains("service -targets-> pod"));
        assert!(s.contains("node -hosts-> pod"));
        assert!(!s.contains("metric"));
    }
}
