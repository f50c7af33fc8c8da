//! Typed property graph of system components, metrics and label-value pairs.
//!
//! The store keeps an entity table, a relation set, an adjacency index keyed
//! by `(entity, relation kind, direction)` and a `(kind, name)` lookup index.
//! Every relation is checked against [`RelationKind::signature`] on insert, so
//! the schema holds for anything that made it into a [`Graph`].

mod schema;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use schema::{Direction, EntityKind, RelationKind, UnknownName};
pub use snapshot::{SNAPSHOT_FORMAT, SNAPSHOT_VERSION};

/// Attribute holding a metric's type (counter, gauge, histogram, summary).
pub const ATTR_METRIC_TYPE: &str = "metric_type";
/// Label name of a label-value pair entity.
pub const ATTR_LABEL: &str = "label";
/// Label value of a label-value pair entity.
pub const ATTR_VALUE: &str = "value";
/// Namespace of a namespaced component (informational only).
pub const ATTR_NAMESPACE: &str = "namespace";

/// Content-derived entity identifier: `Kind/name`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(kind: EntityKind, name: &str) -> Self {
        EntityId(format!("{}/{}", kind.as_str(), name))
    }

    /// Wraps an id read from elsewhere (snapshots, user input).
    pub fn from_raw(raw: impl Into<String>) -> Self {
        EntityId(raw.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, String>,
}

impl Entity {
    pub fn new(kind: EntityKind, name: impl Into<String>) -> Self {
        let name = name.into();
        Entity {
            id: EntityId::new(kind, &name),
            kind,
            name,
            description: None,
            attrs: BTreeMap::new(),
        }
    }

    /// An entity whose id is derived from `key` rather than its display
    /// name, for kinds whose names are only unique within a parent (a
    /// container is keyed by namespace and pod).
    pub fn keyed(kind: EntityKind, key: &str, name: impl Into<String>) -> Self {
        Entity {
            id: EntityId::new(kind, key),
            ..Entity::new(kind, name)
        }
    }

    pub fn metric(name: impl Into<String>, metric_type: &str) -> Self {
        Entity::new(EntityKind::Metric, name).with_attr(ATTR_METRIC_TYPE, metric_type)
    }

    /// A label-value pair named `label="value"`.
    pub fn label_value(label: &str, value: &str) -> Self {
        Entity::new(EntityKind::LabelValuePair, lvp_name(label, value))
            .with_attr(ATTR_LABEL, label)
            .with_attr(ATTR_VALUE, value)
    }

    pub fn with_description(mut self, d: impl Into<String>) -> Self {
        self.description = Some(d.into());
        self
    }

    pub fn with_attr(mut self, k: impl Into<String>, v: impl Into<String>) -> Self {
        self.attrs.insert(k.into(), v.into());
        self
    }

    pub fn attr(&self, k: &str) -> Option<&str> {
        self.attrs.get(k).map(String::as_str)
    }

    fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() {
            return Err("empty name".into());
        }
        match self.kind {
            EntityKind::LabelValuePair => {
                if self.attr(ATTR_LABEL).is_none_or(str::is_empty) {
                    return Err("label-value pair needs a non-empty `label` attr".into());
                }
                if self.attr(ATTR_VALUE).is_none_or(str::is_empty) {
                    return Err("label-value pair needs a non-empty `value` attr".into());
                }
            }
            EntityKind::Metric if self.attr(ATTR_METRIC_TYPE).is_none() => {
                return Err("metric needs a `metric_type` attr".into());
            }
            _ => {}
        }
        Ok(())
    }
}

/// Display name of a label-value pair entity.
pub fn lvp_name(label: &str, value: &str) -> String {
    format!("{label}={value:?}")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub src: EntityId,
    pub kind: RelationKind,
    pub dst: EntityId,
}

impl Relation {
    pub fn new(src: EntityId, kind: RelationKind, dst: EntityId) -> Self {
        Relation { src, kind, dst }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("duplicate entity id {0}")]
    DuplicateId(EntityId),
    #[error("invalid entity {id}: {reason}")]
    InvalidEntity { id: EntityId, reason: String },
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("relation {kind} does not allow {src_kind} -> {dst_kind}")]
    Signature {
        kind: RelationKind,
        src_kind: EntityKind,
        dst_kind: EntityKind,
    },
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
}

type AdjKey = (EntityId, RelationKind, Direction);

/// The graph store. Cheap to share behind `Arc` once built; all mutation
/// goes through `&mut self`.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    entities: BTreeMap<EntityId, Entity>,
    relations: BTreeSet<Relation>,
    adjacency: BTreeMap<AdjKey, BTreeSet<EntityId>>,
    by_name: BTreeMap<(EntityKind, String), BTreeSet<EntityId>>,
    by_kind: BTreeMap<EntityKind, BTreeSet<EntityId>>,
}

static EMPTY: BTreeSet<EntityId> = BTreeSet::new();

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_entity(&mut self, e: Entity) -> Result<EntityId, GraphError> {
        if self.entities.contains_key(&e.id) {
            return Err(GraphError::DuplicateId(e.id));
        }
        e.validate().map_err(|reason| GraphError::InvalidEntity {
            id: e.id.clone(),
            reason,
        })?;
        let id = e.id.clone();
        self.by_name.entry((e.kind, e.name.clone())).or_default().insert(id.clone());
        self.by_kind.entry(e.kind).or_default().insert(id.clone());
        self.entities.insert(id.clone(), e);
        Ok(id)
    }

    /// Inserts `e`, or folds it into an existing entity with the same id:
    /// attrs are merged (existing keys win) and a missing description is
    /// filled in. Used by ingestion, where the same component shows up in
    /// several sources.
    pub fn upsert_entity(&mut self, e: Entity) -> Result<EntityId, GraphError> {
        match self.entities.get_mut(&e.id) {
            None => self.insert_entity(e),
            Some(existing) => {
                if existing.kind != e.kind {
                    return Err(GraphError::InvalidEntity {
                        id: e.id,
                        reason: "kind differs from stored entity".into(),
                    });
                }
                for (k, v) in e.attrs {
                    existing.attrs.entry(k).or_insert(v);
                }
                if existing.description.is_none() {
                    existing.description = e.description;
                }
                Ok(e.id)
            }
        }
    }

    /// Adds a relation. Re-inserting an existing relation is a no-op.
    pub fn insert_relation(&mut self, r: Relation) -> Result<(), GraphError> {
        let src_kind = self.kind_of(&r.src)?;
        let dst_kind = self.kind_of(&r.dst)?;
        if !r.kind.allows(src_kind, dst_kind) {
            return Err(GraphError::Signature {
                kind: r.kind,
                src_kind,
                dst_kind,
            });
        }
        if self.relations.contains(&r) {
            return Ok(());
        }
        self.adjacency
            .entry((r.src.clone(), r.kind, Direction::Forward))
            .or_default()
            .insert(r.dst.clone());
        self.adjacency
            .entry((r.dst.clone(), r.kind, Direction::Backward))
            .or_default()
            .insert(r.src.clone());
        self.relations.insert(r);
        Ok(())
    }

    pub fn relate(&mut self, src: &EntityId, kind: RelationKind, dst: &EntityId) -> Result<(), GraphError> {
        self.insert_relation(Relation::new(src.clone(), kind, dst.clone()))
    }

    fn kind_of(&self, id: &EntityId) -> Result<EntityKind, GraphError> {
        self.entities
            .get(id)
            .map(|e| e.kind)
            .ok_or_else(|| GraphError::UnknownEntity(id.clone()))
    }

    pub fn get(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.entities.contains_key(id)
    }

    /// Ids of entities of `kind` whose display name is exactly `name`.
    pub fn lookup(&self, kind: EntityKind, name: &str) -> &BTreeSet<EntityId> {
        self.by_name.get(&(kind, name.to_string())).unwrap_or(&EMPTY)
    }

    /// Entities related to `id` through `kind`, following `direction`.
    pub fn neighbors(&self, id: &EntityId, kind: RelationKind, direction: Direction) -> Result<&BTreeSet<EntityId>, GraphError> {
        if !self.entities.contains_key(id) {
            return Err(GraphError::UnknownEntity(id.clone()));
        }
        Ok(self.adjacency.get(&(id.clone(), kind, direction)).unwrap_or(&EMPTY))
    }

    pub fn has_relation(&self, src: &EntityId, kind: RelationKind, dst: &EntityId) -> bool {
        self.adjacency
            .get(&(src.clone(), kind, Direction::Forward))
            .is_some_and(|s| s.contains(dst))
    }

    pub fn entities_of_kind(&self, kind: EntityKind) -> &BTreeSet<EntityId> {
        self.by_kind.get(&kind).unwrap_or(&EMPTY)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Per-kind entity counts, every kind present (zero when absent).
    pub fn entity_counts(&self) -> BTreeMap<EntityKind, usize> {
        EntityKind::ALL.iter().map(|&k| (k, self.entities_of_kind(k).len())).collect()
    }

    pub fn relation_counts(&self) -> BTreeMap<RelationKind, usize> {
        let mut out: BTreeMap<RelationKind, usize> = RelationKind::ALL.iter().map(|&k| (k, 0)).collect();
        for r in &self.relations {
            *out.entry(r.kind).or_default() += 1;
        }
        out
    }

    /// Display label used in prompts and traces: `kind:name`.
    pub fn label(&self, id: &EntityId) -> String {
        match self.entities.get(id) {
            Some(e) => format!("{}:{}", e.kind.slug(), e.name),
            None => id.to_string(),
        }
    }
}

/// Structural equality: same entities (with attrs) and same relations.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities && self.relations == other.relations
    }
}

impl Eq for Graph {}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Graph, EntityId, EntityId, EntityId) {
        let mut g = Graph::new();
        let svc = g.insert_entity(Entity::new(EntityKind::Service, "order service")).unwrap();
        let p1 = g.insert_entity(Entity::new(EntityKind::Pod, "pod1")).unwrap();
        let p2 = g.insert_entity(Entity::new(EntityKind::Pod, "pod2")).unwrap();
        g.relate(&svc, RelationKind::Targets, &p1).unwrap();
        g.relate(&svc, RelationKind::Targets, &p2).unwrap();
        (g, svc, p1, p2)
    }

    #[test]
    fn insert_and_lookup() {
        let mut g = Graph::new();
        let id = g.insert_entity(Entity::new(EntityKind::Node, "node1")).unwrap();
        assert_eq!(g.lookup(EntityKind::Node, "node1"), &BTreeSet::from([id.clone()]));
        assert!(g.lookup(EntityKind::Pod, "node1").is_empty());
        assert!(matches!(
            g.insert_entity(Entity::new(EntityKind::Node, "node1")),
            Err(GraphError::DuplicateId(_))
        ));
    }

    #[test]
    fn entity_invariants() {
        let mut g = Graph::new();
        let bad = Entity::new(EntityKind::LabelValuePair, "x")
            .with_attr(ATTR_LABEL, "")
            .with_attr(ATTR_VALUE, "v");
        assert!(matches!(g.insert_entity(bad), Err(GraphError::InvalidEntity { .. })));
        assert!(g.insert_entity(Entity::new(EntityKind::Metric, "m")).is_err());
        assert!(g.insert_entity(Entity::metric("m", "gauge")).is_ok());
    }

    #[test]
    fn targets_both_directions() {
        let (g, svc, p1, p2) = sample();
        let fwd = g.neighbors(&svc, RelationKind::Targets, Direction::Forward).unwrap();
        assert_eq!(fwd, &BTreeSet::from([p1.clone(), p2]));
        let back = g.neighbors(&p1, RelationKind::Targets, Direction::Backward).unwrap();
        assert_eq!(back, &BTreeSet::from([svc]));
    }

    #[test]
    fn signature_and_dangling() {
        let (mut g, _, p1, _) = sample();
        let m = g.insert_entity(Entity::metric("up", "gauge")).unwrap();
        assert!(matches!(
            g.relate(&m, RelationKind::Hosts, &p1),
            Err(GraphError::Signature { .. })
        ));
        let ghost = EntityId::new(EntityKind::Node, "ghost");
        assert!(matches!(
            g.relate(&ghost, RelationKind::Hosts, &p1),
            Err(GraphError::UnknownEntity(_))
        ));
        assert!(g.neighbors(&ghost, RelationKind::Hosts, Direction::Forward).is_err());
    }

    #[test]
    fn duplicate_relation_is_noop() {
        let (mut g, svc, p1, _) = sample();
        let before = g.relation_count();
        g.relate(&svc, RelationKind::Targets, &p1).unwrap();
        assert_eq!(g.relation_count(), before);
    }

    #[test]
    fn isolated_entity_has_no_neighbors() {
        let mut g = Graph::new();
        let n = g.insert_entity(Entity::new(EntityKind::Node, "lonely")).unwrap();
        for k in RelationKind::ALL {
            assert!(g.neighbors(&n, k, Direction::Forward).unwrap().is_empty());
            assert!(g.neighbors(&n, k, Direction::Backward).unwrap().is_empty());
        }
    }

    #[test]
    fn upsert_merges() {
        let mut g = Graph::new();
        g.upsert_entity(Entity::new(EntityKind::Service, "s").with_attr("a", "1"))
            .unwrap();
        g.upsert_entity(
            Entity::new(EntityKind::Service, "s")
                .with_description("d")
                .with_attr("a", "2")
                .with_attr("b", "3"),
        )
        .unwrap();
        let e = g.get(&EntityId::new(EntityKind::Service, "s")).unwrap();
        assert_eq!(e.attr("a"), Some("1"));
        assert_eq!(e.attr("b"), Some("3"));
        assert_eq!(e.description.as_deref(), Some("d"));
    }

    #[test]
    fn graph_is_send_and_sync() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Graph>();
    }
}
