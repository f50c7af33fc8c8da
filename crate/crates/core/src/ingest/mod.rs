//! Building the knowledge graph from four sources: Prometheus metric
//! metadata, Kubernetes resource listings, trace spans and documents.
//!
//! Collection ([`fetch_all`] or the per-source loaders) produces a
//! [`SourceBundle`]; [`build_graph`] turns that into a [`Graph`] plus a
//! [`BuildReport`]. Building is pure and deterministic; all I/O happens
//! while collecting.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::graph::{Entity, EntityId, EntityKind, Graph, GraphError, RelationKind, ATTR_NAMESPACE};

mod docs;
mod fetch;
mod fixture;
mod kube;
mod prometheus;
mod traces;

pub use docs::{load_docs, parse_docs};
pub use fetch::{fetch_all, SourceConfig, SourceFailure};
pub use fixture::write_fixture_dir;
pub use kube::{fetch_kubernetes, load_kubernetes, parse_kube_list, KUBE_LIST_PATHS};
pub use prometheus::{fetch_prometheus, load_prometheus, merge_prometheus, parse_metadata, parse_series, TimeWindow};
pub use traces::{load_traces, parse_traces};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{endpoint}: HTTP {status}: {body}")]
    Http { endpoint: String, status: u16, body: String },
    #[error("{endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("{source_name}: malformed input: {message}")]
    Malformed { source_name: String, message: String },
    #[error("{source_name}: unknown resource kind {kind:?}")]
    UnknownKind { source_name: String, kind: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid linking rule: {0}")]
    Linking(String),
    #[error("{} source(s) failed: {}", .0.len(), .0.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; "))]
    Sources(Vec<SourceFailure>),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl IngestError {
    pub(crate) fn malformed(source_name: &str, message: impl Into<String>) -> Self {
        IngestError::Malformed {
            source_name: source_name.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Worth retrying: throttling, server errors and transport failures.
    pub fn is_retriable(&self) -> bool {
        match self {
            IngestError::Http { status, .. } => *status == 429 || *status >= 500,
            IngestError::Transport { .. } => true,
            _ => false,
        }
    }
}

/// One metric as reported by Prometheus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricMeta {
    pub metric_type: String,
    pub help: String,
    /// Label name to the distinct values seen across the metric's series.
    pub labels: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnerRef {
    pub kind: EntityKind,
    pub name: String,
}

/// A Kubernetes object reduced to what the graph needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KubeObject {
    pub kind: EntityKind,
    pub name: String,
    pub namespace: Option<String>,
    pub labels: BTreeMap<String, String>,
    pub owners: Vec<OwnerRef>,
    /// Pods: the node they are scheduled on.
    pub node_name: Option<String>,
    /// Pods: container names.
    pub containers: Vec<String>,
    /// Services: the pod selector. Empty selects nothing.
    pub selector: BTreeMap<String, String>,
}

impl KubeObject {
    pub fn new(kind: EntityKind, name: impl Into<String>) -> Self {
        KubeObject {
            kind,
            name: name.into(),
            namespace: None,
            labels: BTreeMap::new(),
            owners: Vec::new(),
            node_name: None,
            containers: Vec::new(),
            selector: BTreeMap::new(),
        }
    }

    pub fn in_namespace(mut self, ns: &str) -> Self {
        self.namespace = Some(ns.to_string());
        self
    }

    pub fn owned_by(mut self, kind: EntityKind, name: &str) -> Self {
        self.owners.push(OwnerRef {
            kind,
            name: name.to_string(),
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub trace_id: String,
    pub span_id: String,
    #[serde(default)]
    pub parent_span_id: Option<String>,
    pub service: String,
    pub operation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocEntry {
    pub kind: EntityKind,
    pub name: String,
    pub description: String,
}

/// Everything collected from the four sources.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceBundle {
    pub metrics: BTreeMap<String, MetricMeta>,
    pub kube_objects: Vec<KubeObject>,
    pub spans: Vec<Span>,
    pub docs: Vec<DocEntry>,
}

/// How a component-identifying label value is matched to an entity name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Exact name, then the value with a trailing `:port` removed.
    Exact,
    /// As `Exact`, then the longest entity name that prefixes the value
    /// and is followed by a non-alphanumeric character.
    Prefix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRule {
    pub kind: EntityKind,
    pub mode: MatchMode,
}

/// Which label names identify components, and of which kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkingConfig(pub BTreeMap<String, LinkRule>);

impl Default for LinkingConfig {
    fn default() -> Self {
        let exact = |kind| LinkRule {
            kind,
            mode: MatchMode::Exact,
        };
        LinkingConfig(BTreeMap::from([
            ("pod".to_string(), exact(EntityKind::Pod)),
            ("node".to_string(), exact(EntityKind::Node)),
            ("namespace".to_string(), exact(EntityKind::Namespace)),
            ("service".to_string(), exact(EntityKind::Service)),
            ("container".to_string(), exact(EntityKind::Container)),
            ("deployment".to_string(), exact(EntityKind::Deployment)),
            (
                "instance".to_string(),
                LinkRule {
                    kind: EntityKind::Pod,
                    mode: MatchMode::Prefix,
                },
            ),
        ]))
    }
}

impl LinkingConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        for (label, rule) in &self.0 {
            if !rule.kind.is_component() {
                return Err(IngestError::Linking(format!(
                    "label {label:?} maps to {}, which is not a component kind",
                    rule.kind
                )));
            }
        }
        Ok(())
    }
}

/// Counts and warnings from one build.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub entities: BTreeMap<EntityKind, usize>,
    pub relations: BTreeMap<RelationKind, usize>,
    /// Label-value pairs that gained at least one identifies edge.
    pub linked_label_values: usize,
    /// Per identifying label name: values that matched no entity.
    pub unmatched_label_values: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

impl BuildReport {
    pub fn entity_count(&self, kind: EntityKind) -> usize {
        self.entities.get(&kind).copied().unwrap_or(0)
    }

    pub fn relation_count(&self, kind: RelationKind) -> usize {
        self.relations.get(&kind).copied().unwrap_or(0)
    }

    /// Two-column table of counts per entity and relation kind.
    pub fn table(&self) -> String {
        let mut s = String::from("Entity              Count\n");
        for kind in EntityKind::ALL {
            s.push_str(&format!("{:<20}{}\n", kind.as_str(), self.entity_count(kind)));
        }
        s.push_str("\nRelation            Count\n");
        for kind in RelationKind::ALL {
            s.push_str(&format!("{:<20}{}\n", kind.as_str(), self.relation_count(kind)));
        }
        s.push_str(&format!("\nlinked label values   {}\n", self.linked_label_values));
        for (label, n) in &self.unmatched_label_values {
            s.push_str(&format!("unmatched {label:<12}{n}\n"));
        }
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }
}

/// A build together with how long it took.
#[derive(Debug)]
pub struct TimedBuild {
    pub graph: Graph,
    pub report: BuildReport,
    pub elapsed: Duration,
}

/// Id of a container entity: containers are only unique within a pod.
pub fn container_id(namespace: Option<&str>, pod: &str, container: &str) -> EntityId {
    EntityId::new(EntityKind::Container, &container_key(namespace, pod, container))
}

fn container_key(namespace: Option<&str>, pod: &str, container: &str) -> String {
    format!("{}/{pod}/{container}", namespace.unwrap_or("-"))
}

struct Builder<'a> {
    g: Graph,
    report: BuildReport,
    linking: &'a LinkingConfig,
}

impl Builder<'_> {
    fn component(&mut self, kind: EntityKind, name: &str) -> Result<EntityId, IngestError> {
        Ok(self.g.upsert_entity(Entity::new(kind, name))?)
    }

    fn relate(&mut self, src: &EntityId, kind: RelationKind, dst: &EntityId) -> Result<(), IngestError> {
        Ok(self.g.relate(src, kind, dst)?)
    }

    fn warn(&mut self, w: String) {
        tracing::warn!("{w}");
        self.report.warnings.push(w);
    }

    fn kube(&mut self, objects: &[KubeObject]) -> Result<(), IngestError> {
        // Entities first so owner references and selectors can point anywhere.
        for o in objects {
            if !o.kind.is_component() || matches!(o.kind, EntityKind::Container | EntityKind::Api) {
                self.warn(format!("skipping kube object {}/{}: not a resource kind", o.kind, o.name));
                continue;
            }
            let mut e = Entity::new(o.kind, &o.name);
            if let Some(ns) = &o.namespace {
                e = e.with_attr(ATTR_NAMESPACE, ns);
            }
            self.g.upsert_entity(e)?;
        }
        for o in objects {
            if !matches!(
                o.kind,
                EntityKind::Namespace
                    | EntityKind::Node
                    | EntityKind::Pod
                    | EntityKind::Deployment
                    | EntityKind::ReplicaSet
                    | EntityKind::StatefulSet
                    | EntityKind::Service
            ) {
                continue;
            }
            let id = EntityId::new(o.kind, &o.name);
            if let Some(ns) = &o.namespace {
                if RelationKind::Contains.allows(EntityKind::Namespace, o.kind) {
                    let ns_id = self.component(EntityKind::Namespace, ns)?;
                    self.relate(&ns_id, RelationKind::Contains, &id)?;
                }
            }
            for owner in &o.owners {
                if !RelationKind::Manages.allows(owner.kind, o.kind) {
                    self.warn(format!(
                        "{}/{}: ignoring owner {}/{} (no manages relation between these kinds)",
                        o.kind, o.name, owner.kind, owner.name
                    ));
                    continue;
                }
                let owner_id = EntityId::new(owner.kind, &owner.name);
                if !self.g.contains(&owner_id) {
                    self.warn(format!("{}/{}: owner {owner_id} not listed", o.kind, o.name));
                    continue;
                }
                self.relate(&owner_id, RelationKind::Manages, &id)?;
            }
            if o.kind == EntityKind::Pod {
                if let Some(node) = &o.node_name {
                    let node_id = self.component(EntityKind::Node, node)?;
                    self.relate(&node_id, RelationKind::Hosts, &id)?;
                }
                for c in &o.containers {
                    let mut e = Entity::keyed(EntityKind::Container, &container_key(o.namespace.as_deref(), &o.name, c), c);
                    if let Some(ns) = &o.namespace {
                        e = e.with_attr(ATTR_NAMESPACE, ns);
                    }
                    let cid = self.g.upsert_entity(e)?;
                    self.relate(&id, RelationKind::Contains, &cid)?;
                }
            }
        }
        // Service selectors pick pods in the same namespace by label.
        for svc in objects.iter().filter(|o| o.kind == EntityKind::Service) {
            if svc.selector.is_empty() {
                continue;
            }
            let svc_id = EntityId::new(EntityKind::Service, &svc.name);
            for pod in objects.iter().filter(|o| o.kind == EntityKind::Pod) {
                let selected = pod.namespace == svc.namespace && svc.selector.iter().all(|(k, v)| pod.labels.get(k) == Some(v));
                if selected {
                    self.relate(&svc_id, RelationKind::Targets, &EntityId::new(EntityKind::Pod, &pod.name))?;
                }
            }
        }
        Ok(())
    }

    fn traces(&mut self, spans: &[Span]) -> Result<(), IngestError> {
        let mut by_id: BTreeMap<(&str, &str), &Span> = BTreeMap::new();
        for s in spans {
            by_id.insert((&s.trace_id, &s.span_id), s);
        }
        for s in spans {
            let svc = self.component(EntityKind::Service, &s.service)?;
            let api = self.component(EntityKind::Api, &s.operation)?;
            self.relate(&svc, RelationKind::Provides, &api)?;
        }
        for s in spans {
            let Some(pid) = &s.parent_span_id else { continue };
            let Some(parent) = by_id.get(&(s.trace_id.as_str(), pid.as_str())) else {
                self.warn(format!(
                    "trace {}: span {} has unknown parent {pid}; kept as a root",
                    s.trace_id, s.span_id
                ));
                continue;
            };
            if parent.service == s.service {
                continue;
            }
            let caller = EntityId::new(EntityKind::Service, &parent.service);
            let callee = EntityId::new(EntityKind::Service, &s.service);
            let api = EntityId::new(EntityKind::Api, &s.operation);
            self.relate(&caller, RelationKind::Requests, &callee)?;
            self.relate(&caller, RelationKind::Requests, &api)?;
        }
        Ok(())
    }

    fn docs(&mut self, docs: &[DocEntry]) -> Result<(), IngestError> {
        for d in docs {
            self.g
                .upsert_entity(Entity::new(d.kind, &d.name).with_description(&d.description))?;
        }
        Ok(())
    }

    /// Entities a component-identifying label value refers to.
    fn resolve_label_value(&self, rule: LinkRule, value: &str) -> Vec<EntityId> {
        let exact = self.g.lookup(rule.kind, value);
        if !exact.is_empty() {
            return exact.iter().cloned().collect();
        }
        let stripped = strip_port(value);
        if stripped != value {
            let hit = self.g.lookup(rule.kind, stripped);
            if !hit.is_empty() {
                return hit.iter().cloned().collect();
            }
        }
        if rule.mode == MatchMode::Prefix {
            let best = self
                .g
                .entities_of_kind(rule.kind)
                .iter()
                .filter_map(|id| self.g.get(id))
                .filter(|e| {
                    stripped.len() > e.name.len()
                        && stripped.starts_with(&e.name)
                        && !stripped[e.name.len()..].starts_with(|c: char| c.is_ascii_alphanumeric())
                })
                .max_by(|a, b| a.name.len().cmp(&b.name.len()).then_with(|| b.id.cmp(&a.id)));
            if let Some(e) = best {
                return vec![e.id.clone()];
            }
        }
        Vec::new()
    }

    fn metrics(&mut self, metrics: &BTreeMap<String, MetricMeta>) -> Result<(), IngestError> {
        let mut linked: BTreeSet<EntityId> = BTreeSet::new();
        let mut unmatched: BTreeSet<(String, String)> = BTreeSet::new();
        for (name, meta) in metrics {
            let mut m = Entity::metric(name, &meta.metric_type);
            if !meta.help.is_empty() {
                m = m.with_description(&meta.help);
            }
            let mid = self.g.upsert_entity(m)?;
            for (label, values) in &meta.labels {
                for value in values {
                    if value.is_empty() {
                        continue;
                    }
                    let lvp = self.g.upsert_entity(Entity::label_value(label, value))?;
                    self.relate(&mid, RelationKind::HasLabel, &lvp)?;
                    let Some(rule) = self.linking.0.get(label).copied() else {
                        continue;
                    };
                    let targets = self.resolve_label_value(rule, value);
                    if targets.is_empty() {
                        unmatched.insert((label.clone(), value.clone()));
                    }
                    for t in targets {
                        self.relate(&lvp, RelationKind::Identifies, &t)?;
                        linked.insert(lvp.clone());
                    }
                }
            }
        }
        self.report.linked_label_values = linked.len();
        for (label, _) in unmatched {
            *self.report.unmatched_label_values.entry(label).or_default() += 1;
        }
        Ok(())
    }
}

fn strip_port(value: &str) -> &str {
    match value.rsplit_once(':') {
        Some((host, port)) if !host.is_empty() && !port.is_empty() && port.bytes().all(|b| b.is_ascii_digit()) => host,
        _ => value,
    }
}

/// Builds the graph: components from Kubernetes, services and APIs from
/// traces, descriptions from documents, and finally metrics with their
/// label-value pairs, linked to the components they name.
pub fn build_graph(bundle: &SourceBundle, linking: &LinkingConfig) -> Result<(Graph, BuildReport), IngestError> {
    linking.validate()?;
    let mut b = Builder {
        g: Graph::new(),
        report: BuildReport::default(),
        linking,
    };
    b.kube(&bundle.kube_objects)?;
    b.traces(&bundle.spans)?;
    b.docs(&bundle.docs)?;
    b.metrics(&bundle.metrics)?;
    b.report.entities = b.g.entity_counts();
    b.report.relations = b.g.relation_counts();
    Ok((b.g, b.report))
}

/// [`build_graph`], timed.
pub fn build_graph_timed(bundle: &SourceBundle, linking: &LinkingConfig) -> Result<TimedBuild, IngestError> {
    let t = std::time::Instant::now();
    let (graph, report) = build_graph(bundle, linking)?;
    Ok(TimedBuild {
        graph,
        report,
        elapsed: t.elapsed(),
    })
}
