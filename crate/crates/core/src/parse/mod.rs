//! Question parsing: relation paths and metric/component pairs.
//!
//! Both extractions are one model call each. The model's reply is read
//! line by line under the grammars in [`grammar`]; anything that does not
//! fit is skipped and reported, never fatal.

pub mod grammar;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{Direction, EntityKind, RelationKind};
use crate::llm::{LlmError, Session};
use crate::prompts;
pub use grammar::{parse_pair_line, parse_path_line, render_pair, render_path, GrammarError};

pub const STAGE_PATHS: &str = "extract_paths";
pub const STAGE_PAIRS: &str = "extract_pairs";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathName {
    Named(String),
    Placeholder,
}

impl PathName {
    pub fn is_placeholder(&self) -> bool {
        matches!(self, PathName::Placeholder)
    }

    pub fn as_named(&self) -> Option<&str> {
        match self {
            PathName::Named(n) => Some(n),
            PathName::Placeholder => None,
        }
    }
}

impl fmt::Display for PathName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathName::Named(n) => f.write_str(n),
            PathName::Placeholder => f.write_str("?"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathElement {
    pub kind: EntityKind,
    pub name: PathName,
}

impl PathElement {
    pub fn named(kind: EntityKind, name: impl Into<String>) -> Self {
        PathElement {
            kind,
            name: PathName::Named(name.into()),
        }
    }

    pub fn placeholder(kind: EntityKind) -> Self {
        PathElement {
            kind,
            name: PathName::Placeholder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hop {
    pub relation: RelationKind,
    pub direction: Direction,
}

impl Hop {
    pub fn forward(relation: RelationKind) -> Self {
        Hop {
            relation,
            direction: Direction::Forward,
        }
    }

    pub fn backward(relation: RelationKind) -> Self {
        Hop {
            relation,
            direction: Direction::Backward,
        }
    }

    pub fn flipped(self) -> Self {
        Hop {
            relation: self.relation,
            direction: self.direction.flip(),
        }
    }
}

/// `e1 r1 e2 ... en`, stored as the first element plus `(ri, ei+1)` hops so
/// the odd-length shape cannot be broken.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentsRelationPath {
    pub start: PathElement,
    pub hops: Vec<(Hop, PathElement)>,
}

impl ComponentsRelationPath {
    pub fn single(start: PathElement) -> Self {
        ComponentsRelationPath { start, hops: Vec::new() }
    }

    pub fn then(mut self, hop: Hop, e: PathElement) -> Self {
        self.hops.push((hop, e));
        self
    }

    pub fn elements(&self) -> impl Iterator<Item = &PathElement> {
        std::iter::once(&self.start).chain(self.hops.iter().map(|(_, e)| e))
    }

    /// Number of entities (`(len + 1) / 2` in alternating-list terms).
    pub fn entity_count(&self) -> usize {
        self.hops.len() + 1
    }

    pub fn validate(&self) -> Result<(), GrammarError> {
        for e in self.elements() {
            if !e.kind.is_component() {
                return Err(GrammarError::NotComponent(e.kind));
            }
        }
        let mut prev = self.start.kind;
        for (hop, e) in &self.hops {
            if !hop.relation.allows_hop(prev, hop.direction, e.kind) {
                return Err(GrammarError::Signature {
                    relation: hop.relation,
                    direction: hop.direction,
                    from: prev,
                    to: e.kind,
                });
            }
            prev = e.kind;
        }
        if self.elements().all(|e| e.name.is_placeholder()) {
            return Err(GrammarError::AllPlaceholders);
        }
        Ok(())
    }
}

impl fmt::Display for ComponentsRelationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_path(self))
    }
}

/// The component kind a metric is measured on, or every kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentScope {
    Kind(EntityKind),
    All,
}

impl fmt::Display for ComponentScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentScope::Kind(k) => f.write_str(k.slug()),
            ComponentScope::All => f.write_str("ALL"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricComponentPair {
    pub metric_description: String,
    pub component: ComponentScope,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedQuestion {
    pub paths: Vec<ComponentsRelationPath>,
    pub pairs: Vec<MetricComponentPair>,
    pub diagnostics: Vec<String>,
}

/// Paths found in a model reply plus one note per rejected line.
pub fn paths_from_text(text: &str) -> (Vec<ComponentsRelationPath>, Vec<String>) {
    let mut paths: Vec<ComponentsRelationPath> = Vec::new();
    let mut notes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_path_line(line) {
            Ok(p) => {
                if !paths.contains(&p) {
                    paths.push(p);
                }
            }
            Err(GrammarError::NoPath) => {}
            Err(e) => {
                tracing::warn!(line = i + 1, error = %e, "dropping path line");
                notes.push(format!("path line {}: {e}: {}", i + 1, line.trim()));
            }
        }
    }
    (paths, notes)
}

/// Pairs found in a model reply, with the fallback applied: no usable pair
/// means the whole question becomes the metric description, scope ALL.
pub fn pairs_from_text(text: &str, question: &str) -> Vec<MetricComponentPair> {
    let mut pairs: Vec<MetricComponentPair> = Vec::new();
    for line in text.lines() {
        if let Some((metric_description, component)) = parse_pair_line(line) {
            let p = MetricComponentPair {
                metric_description,
                component,
            };
            if !pairs.contains(&p) {
                pairs.push(p);
            }
        }
    }
    if pairs.is_empty() {
        pairs.push(MetricComponentPair {
            metric_description: question.trim().to_string(),
            component: ComponentScope::All,
        });
    }
    pairs
}

pub fn extract_paths(question: &str, session: &mut Session) -> Result<(Vec<ComponentsRelationPath>, Vec<String>), LlmError> {
    let prompt = prompts::extract_paths(question);
    let reply = session.ask(STAGE_PATHS, prompt)?;
    Ok(paths_from_text(&reply))
}

pub fn extract_pairs(question: &str, session: &mut Session) -> Result<Vec<MetricComponentPair>, LlmError> {
    let prompt = prompts::extract_pairs(question);
    let reply = session.ask(STAGE_PAIRS, prompt)?;
    Ok(pairs_from_text(&reply, question))
}
