//! Entity and relation vocabulary of the system context graph.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Node,
    Deployment,
    Namespace,
    ReplicaSet,
    Pod,
    StatefulSet,
    Service,
    Container,
    #[serde(rename = "API")]
    Api,
    Metric,
    LabelValuePair,
}

impl EntityKind {
    pub const ALL: [EntityKind; 11] = [
        EntityKind::Node,
        EntityKind::Deployment,
        EntityKind::Namespace,
        EntityKind::ReplicaSet,
        EntityKind::Pod,
        EntityKind::StatefulSet,
        EntityKind::Service,
        EntityKind::Container,
        EntityKind::Api,
        EntityKind::Metric,
        EntityKind::LabelValuePair,
    ];

    pub const COMPONENTS: [EntityKind; 9] = [
        EntityKind::Node,
        EntityKind::Deployment,
        EntityKind::Namespace,
        EntityKind::ReplicaSet,
        EntityKind::Pod,
        EntityKind::StatefulSet,
        EntityKind::Service,
        EntityKind::Container,
        EntityKind::Api,
    ];

    pub fn is_component(self) -> bool {
        !matches!(self, EntityKind::Metric | EntityKind::LabelValuePair)
    }

    /// Canonical spelling used in snapshots and ids.
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Node => "Node",
            EntityKind::Deployment => "Deployment",
            EntityKind::Namespace => "Namespace",
            EntityKind::ReplicaSet => "ReplicaSet",
            EntityKind::Pod => "Pod",
            EntityKind::StatefulSet => "StatefulSet",
            EntityKind::Service => "Service",
            EntityKind::Container => "Container",
            EntityKind::Api => "API",
            EntityKind::Metric => "Metric",
            EntityKind::LabelValuePair => "LabelValuePair",
        }
    }

    /// Lower-case spelling used in relation paths and prompts.
    pub fn slug(self) -> &'static str {
        match self {
            EntityKind::Node => "node",
            EntityKind::Deployment => "deployment",
            EntityKind::Namespace => "namespace",
            EntityKind::ReplicaSet => "replicaset",
            EntityKind::Pod => "pod",
            EntityKind::StatefulSet => "statefulset",
            EntityKind::Service => "service",
            EntityKind::Container => "container",
            EntityKind::Api => "api",
            EntityKind::Metric => "metric",
            EntityKind::LabelValuePair => "label_value_pair",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {what}: {value:?}")]
pub struct UnknownName {
    pub what: &'static str,
    pub value: String,
}

fn normalize(s: &str) -> String {
    s.trim()
        .chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .collect::<String>()
        .to_ascii_lowercase()
}

impl FromStr for EntityKind {
    type Err = UnknownName;

    /// Case-insensitive; ignores `_`, `-` and spaces so `replica_set`,
    /// `ReplicaSet` and `replicaset` all parse.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n = normalize(s);
        let kind = match n.as_str() {
            "node" | "nodes" => EntityKind::Node,
            "deployment" | "deployments" => EntityKind::Deployment,
            "namespace" | "namespaces" => EntityKind::Namespace,
            "replicaset" | "replicasets" => EntityKind::ReplicaSet,
            "pod" | "pods" => EntityKind::Pod,
            "statefulset" | "statefulsets" => EntityKind::StatefulSet,
            "service" | "services" => EntityKind::Service,
            "container" | "containers" => EntityKind::Container,
            "api" | "apis" => EntityKind::Api,
            "metric" | "metrics" => EntityKind::Metric,
            "labelvaluepair" | "lvp" => EntityKind::LabelValuePair,
            _ => {
                return Err(UnknownName {
                    what: "entity kind",
                    value: s.to_string(),
                })
            }
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Hosts,
    Contains,
    Manages,
    Targets,
    Provides,
    Requests,
    HasLabel,
    Identifies,
}

impl RelationKind {
    pub const ALL: [RelationKind; 8] = [
        RelationKind::Hosts,
        RelationKind::Contains,
        RelationKind::Manages,
        RelationKind::Targets,
        RelationKind::Provides,
        RelationKind::Requests,
        RelationKind::HasLabel,
        RelationKind::Identifies,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Hosts => "hosts",
            RelationKind::Contains => "contains",
            RelationKind::Manages => "manages",
            RelationKind::Targets => "targets",
            RelationKind::Provides => "provides",
            RelationKind::Requests => "requests",
            RelationKind::HasLabel => "has_label",
            RelationKind::Identifies => "identifies",
        }
    }

    /// Permitted (source kind, target kind) combinations.
    pub fn signature(self) -> &'static [(EntityKind, EntityKind)] {
        use EntityKind::*;
        match self {
            RelationKind::Hosts => &[(Node, Pod)],
            RelationKind::Contains => &[
                (Namespace, Deployment),
                (Namespace, Service),
                (Namespace, Pod),
                (Namespace, ReplicaSet),
                (Namespace, StatefulSet),
                (Pod, Container),
            ],
            RelationKind::Manages => &[(Deployment, ReplicaSet), (ReplicaSet, Pod), (StatefulSet, Pod)],
            RelationKind::Targets => &[(Service, Pod)],
            RelationKind::Provides => &[(Service, Api)],
            RelationKind::Requests => &[(Service, Service), (Service, Api)],
            RelationKind::HasLabel => &[(Metric, LabelValuePair)],
            RelationKind::Identifies => &[
                (LabelValuePair, Node),
                (LabelValuePair, Deployment),
                (LabelValuePair, Namespace),
                (LabelValuePair, ReplicaSet),
                (LabelValuePair, Pod),
                (LabelValuePair, StatefulSet),
                (LabelValuePair, Service),
                (LabelValuePair, Container),
                (LabelValuePair, Api),
            ],
        }
    }

    pub fn allows(self, src: EntityKind, dst: EntityKind) -> bool {
        self.signature().contains(&(src, dst))
    }

    /// Whether a hop of this relation in `direction` can lead from `from` to `to`.
    pub fn allows_hop(self, from: EntityKind, direction: Direction, to: EntityKind) -> bool {
        match direction {
            Direction::Forward => self.allows(from, to),
            Direction::Backward => self.allows(to, from),
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = UnknownName;

    /// Accepts singular verb forms too (`host`, `target`, ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n = normalize(s);
        let kind = match n.as_str() {
            "hosts" | "host" | "hostedon" => RelationKind::Hosts,
            "contains" | "contain" => RelationKind::Contains,
            "manages" | "manage" => RelationKind::Manages,
            "targets" | "target" => RelationKind::Targets,
            "provides" | "provide" => RelationKind::Provides,
            "requests" | "request" => RelationKind::Requests,
            "haslabel" => RelationKind::HasLabel,
            "identifies" | "identify" => RelationKind::Identifies,
            _ => {
                return Err(UnknownName {
                    what: "relation",
                    value: s.to_string(),
                })
            }
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}
