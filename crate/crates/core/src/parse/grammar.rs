//! Line grammars for model output.
//!
//! Relation paths, one per line:
//!
//! ```text
//! path  = node { edge node }
//! node  = "(" kind ":" name ")"
//! edge  = "-" rel "->"          forward hop
//!       | "<-" rel "-"          backward hop
//! kind  = entity kind, case-insensitive, e.g. "service", "ReplicaSet"
//! name  = "?" | any text without "(" or ")", optionally in double quotes
//! rel   = relation name, case-insensitive, e.g. "targets", "host"
//! ```
//!
//! Whitespace around every token is ignored. Text before the first `(` is
//! treated as a list marker (`1.`, `-`, `Path:`) and skipped; only
//! punctuation may follow the last node.
//!
//! Metric/component pairs, one per line:
//!
//! ```text
//! pair  = "metric:" text [ "|" "component:" ( kind | "ALL" ) ]
//! ```

use super::{ComponentScope, ComponentsRelationPath, Hop, PathElement, PathName};
use crate::graph::{Direction, EntityKind, RelationKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("no path on this line")]
    NoPath,
    #[error("expected {expected} at column {col}")]
    Expected { expected: &'static str, col: usize },
    #[error("unknown entity kind {0:?}")]
    Kind(String),
    #[error("{0:?} is not a component kind")]
    NotComponent(EntityKind),
    #[error("unknown relation {0:?}")]
    Relation(String),
    #[error("relation {relation} cannot go {direction:?} from {from} to {to}")]
    Signature {
        relation: RelationKind,
        direction: Direction,
        from: EntityKind,
        to: EntityKind,
    },
    #[error("every entity name is a placeholder")]
    AllPlaceholders,
    #[error("trailing text {0:?}")]
    Trailing(String),
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start().len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &'static str) -> Result<(), GrammarError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(GrammarError::Expected {
                expected: tok,
                col: self.pos + 1,
            })
        }
    }

    /// Text up to (not including) the first char in `stops`.
    fn take_until(&mut self, stops: &[char]) -> &'a str {
        let r = self.rest();
        let end = r.find(|c| stops.contains(&c)).unwrap_or(r.len());
        self.pos += end;
        &r[..end]
    }
}

fn parse_node(c: &mut Cursor<'_>) -> Result<PathElement, GrammarError> {
    c.expect("(")?;
    let kind_text = c.take_until(&[':', '(', ')']).trim();
    c.expect(":")?;
    let kind: EntityKind = kind_text.parse().map_err(|_| GrammarError::Kind(kind_text.to_string()))?;
    if !kind.is_component() {
        return Err(GrammarError::NotComponent(kind));
    }
    let raw = c.take_until(&['(', ')']).trim();
    c.expect(")")?;
    let unquoted = raw
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .or_else(|| raw.strip_prefix('\'').and_then(|r| r.strip_suffix('\'')))
        .unwrap_or(raw)
        .trim();
    let name = if unquoted.is_empty() || unquoted == "?" {
        PathName::Placeholder
    } else {
        PathName::Named(unquoted.to_string())
    };
    Ok(PathElement { kind, name })
}

fn parse_relation(text: &str) -> Result<RelationKind, GrammarError> {
    let t = text.trim();
    t.parse().map_err(|_| GrammarError::Relation(t.to_string()))
}

/// Parses one line into a relation path and checks it against the schema.
pub fn parse_path_line(line: &str) -> Result<ComponentsRelationPath, GrammarError> {
    let start = line.find('(').ok_or(GrammarError::NoPath)?;
    let mut c = Cursor { s: line, pos: start };
    let first = parse_node(&mut c)?;
    let mut hops = Vec::new();
    loop {
        c.skip_ws();
        let (direction, relation) = if c.eat("<-") {
            let rel = c.take_until(&['-', '(', ')']);
            let rel = parse_relation(rel)?;
            c.expect("-")?;
            (Direction::Backward, rel)
        } else if c.rest().starts_with('-') {
            c.pos += 1;
            let rel = c.take_until(&['-', '(', ')', '>']);
            let rel = parse_relation(rel)?;
            c.expect("->")?;
            (Direction::Forward, rel)
        } else {
            break;
        };
        let node = parse_node(&mut c)?;
        hops.push((Hop { relation, direction }, node));
    }
    let trailing = c.rest().trim();
    if trailing.chars().any(|ch| ch.is_alphanumeric() || ch == '(' || ch == '-') {
        return Err(GrammarError::Trailing(trailing.to_string()));
    }
    let path = ComponentsRelationPath { start: first, hops };
    path.validate()?;
    Ok(path)
}

/// Parses one `metric: ... | component: ...` line.
pub fn parse_pair_line(line: &str) -> Option<(String, ComponentScope)> {
    let body = line
        .trim()
        .trim_start_matches(|c: char| c == '-' || c == '*' || c.is_whitespace());
    let lower = body.to_ascii_lowercase();
    if !lower.starts_with("metric:") {
        return None;
    }
    let rest = &body["metric:".len()..];
    let (metric, comp) = match rest.split_once('|') {
        Some((m, c)) => (m, Some(c)),
        None => (rest, None),
    };
    let metric = metric.trim().trim_matches('"').trim();
    if metric.is_empty() {
        return None;
    }
    let scope = comp
        .and_then(|c| {
            let c = c.trim();
            let lc = c.to_ascii_lowercase();
            lc.strip_prefix("component:")
                .map(|_| c["component:".len()..].trim().to_string())
        })
        .map(|k| {
            if k.eq_ignore_ascii_case("all") || k.is_empty() || k == "?" {
                ComponentScope::All
            } else {
                match k.parse::<EntityKind>() {
                    Ok(kind) if kind.is_component() => ComponentScope::Kind(kind),
                    _ => ComponentScope::All,
                }
            }
        })
        .unwrap_or(ComponentScope::All);
    Some((metric.to_string(), scope))
}

/// Canonical text of a path; `parse_path_line(render_path(p)) == p`.
pub fn render_path(p: &ComponentsRelationPath) -> String {
    fn node(e: &PathElement) -> String {
        match &e.name {
            PathName::Placeholder => format!("({}:?)", e.kind.slug()),
            PathName::Named(n) => format!("({}:{})", e.kind.slug(), n),
        }
    }
    let mut s = node(&p.start);
    for (hop, e) in &p.hops {
        match hop.direction {
            Direction::Forward => s.push_str(&format!("-{}->", hop.relation)),
            Direction::Backward => s.push_str(&format!("<-{}-", hop.relation)),
        }
        s.push_str(&node(e));
    }
    s
}

pub fn render_pair(metric: &str, scope: &ComponentScope) -> String {
    format!("metric: {metric} | component: {scope}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn service_pod_node_path() {
        let p = parse_path_line("(service: order service)-targets->(pod:?)<-host-(node:?)").unwrap();
        assert_eq!(p.start.kind, EntityKind::Service);
        assert_eq!(p.start.name, PathName::Named("order service".into()));
        assert_eq!(p.hops.len(), 2);
        assert_eq!(
            p.hops[1].0,
            Hop {
                relation: RelationKind::Hosts,
                direction: Direction::Backward
            }
        );
        assert_eq!(render_path(&p), "(service:order service)-targets->(pod:?)<-hosts-(node:?)");
    }

    #[test]
    fn list_markers_and_quotes() {
        let p = parse_path_line(r#"1. (Service:"ts-order-service") -targets-> (Pod:?)."#).unwrap();
        assert_eq!(p.start.name, PathName::Named("ts-order-service".into()));
    }

    #[test]
    fn rejects() {
        assert_eq!(parse_path_line("no parens here"), Err(GrammarError::NoPath));
        assert!(matches!(
            parse_path_line("(pod:x)-hosts->(node:y)"),
            Err(GrammarError::Signature { .. })
        ));
        assert_eq!(parse_path_line("(pod:?)<-hosts-(node:?)"), Err(GrammarError::AllPlaceholders));
        assert!(matches!(parse_path_line("(metric:up)"), Err(GrammarError::NotComponent(_))));
        assert!(matches!(
            parse_path_line("(pod:a)-eats->(node:b)"),
            Err(GrammarError::Relation(_))
        ));
        assert!(matches!(parse_path_line("(pod:a) and more"), Err(GrammarError::Trailing(_))));
        assert!(parse_path_line("(pod:a").is_err());
    }

    #[test]
    fn pairs() {
        assert_eq!(
            parse_pair_line("metric: available memory | component: node"),
            Some(("available memory".into(), ComponentScope::Kind(EntityKind::Node)))
        );
        assert_eq!(
            parse_pair_line("- Metric: cpu usage"),
            Some(("cpu usage".into(), ComponentScope::All))
        );
        assert_eq!(
            parse_pair_line("metric: x | component: ALL"),
            Some(("x".into(), ComponentScope::All))
        );
        assert_eq!(parse_pair_line("metric:  | component: pod"), None);
        assert_eq!(parse_pair_line("thinking about metrics"), None);
    }
}
