//! Kubernetes resource listings.
//!
//! Input is the standard list format returned by the API server (and by
//! `kubectl get <kind> -o json`):
//!
//! ```json
//! {"kind":"PodList","items":[{"metadata":{"name":"p","namespace":"ns","labels":{},"ownerReferences":[{"kind":"ReplicaSet","name":"rs"}]},
//!                             "spec":{"nodeName":"node1","containers":[{"name":"app"}]}}]}
//! ```
//!
//! A generic `{"kind":"List"}` whose items carry their own `kind` also works.
//! Services take their selector from `spec.selector`; other fields are
//! ignored.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::fetch::{get_json, read_file};
use super::{IngestError, KubeObject, OwnerRef};
use crate::graph::EntityKind;

const SOURCE: &str = "kubernetes";

/// API paths listed in live mode, cluster-wide.
pub const KUBE_LIST_PATHS: [&str; 7] = [
    "/api/v1/namespaces",
    "/api/v1/nodes",
    "/api/v1/pods",
    "/api/v1/services",
    "/apis/apps/v1/deployments",
    "/apis/apps/v1/replicasets",
    "/apis/apps/v1/statefulsets",
];

#[derive(Deserialize)]
struct List {
    #[serde(default)]
    kind: String,
    #[serde(default)]
    items: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    #[serde(default)]
    kind: Option<String>,
    metadata: Metadata,
    #[serde(default)]
    spec: Spec,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Metadata {
    name: String,
    #[serde(default)]
    namespace: Option<String>,
    #[serde(default)]
    labels: BTreeMap<String, String>,
    #[serde(default)]
    owner_references: Vec<WireOwner>,
}

#[derive(Deserialize)]
struct WireOwner {
    kind: String,
    name: String,
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct Spec {
    #[serde(default)]
    node_name: Option<String>,
    #[serde(default)]
    containers: Vec<Container>,
    #[serde(default)]
    selector: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct Container {
    name: String,
}

fn resource_kind(kind: &str) -> Result<EntityKind, IngestError> {
    let k = match kind {
        "Namespace" => EntityKind::Namespace,
        "Node" => EntityKind::Node,
        "Pod" => EntityKind::Pod,
        "Service" => EntityKind::Service,
        "Deployment" => EntityKind::Deployment,
        "ReplicaSet" => EntityKind::ReplicaSet,
        "StatefulSet" => EntityKind::StatefulSet,
        other => {
            return Err(IngestError::UnknownKind {
                source_name: SOURCE.into(),
                kind: other.into(),
            })
        }
    };
    Ok(k)
}

/// Parses one list response into typed objects.
pub fn parse_kube_list(body: &str) -> Result<Vec<KubeObject>, IngestError> {
    let list: List = serde_json::from_str(body).map_err(|e| IngestError::malformed(SOURCE, e.to_string()))?;
    let list_item_kind = list.kind.strip_suffix("List").filter(|k| !k.is_empty());
    let mut out = Vec::with_capacity(list.items.len());
    for item in list.items {
        let kind_name = item
            .kind
            .as_deref()
            .or(list_item_kind)
            .ok_or_else(|| IngestError::malformed(SOURCE, format!("item {} has no kind", item.metadata.name)))?;
        let kind = resource_kind(kind_name)?;
        let mut owners = Vec::new();
        for o in item.metadata.owner_references {
            // Owners outside the graph schema (Job, DaemonSet, ...) are
            // kept out rather than failing the whole listing.
            if let Ok(k) = resource_kind(&o.kind) {
                owners.push(OwnerRef { kind: k, name: o.name });
            } else {
                tracing::debug!(owner = %o.kind, "ignoring owner reference of unsupported kind");
            }
        }
        let selector = match (kind, item.spec.selector) {
            (EntityKind::Service, Some(v)) => serde_json::from_value(v)
                .map_err(|e| IngestError::malformed(SOURCE, format!("service {}: selector: {e}", item.metadata.name)))?,
            _ => BTreeMap::new(),
        };
        out.push(KubeObject {
            kind,
            name: item.metadata.name,
            namespace: item.metadata.namespace,
            labels: item.metadata.labels,
            owners,
            node_name: item.spec.node_name,
            containers: item.spec.containers.into_iter().map(|c| c.name).collect(),
            selector,
        });
    }
    Ok(out)
}

pub fn load_kubernetes(files: &[impl AsRef<Path>]) -> Result<Vec<KubeObject>, IngestError> {
    let mut out = Vec::new();
    for f in files {
        out.extend(parse_kube_list(&read_file(f.as_ref())?)?);
    }
    Ok(out)
}

/// Lists every supported resource kind from a live API server.
pub fn fetch_kubernetes(
    http: &reqwest::blocking::Client,
    base_url: &str,
    bearer: Option<&str>,
) -> Result<Vec<KubeObject>, IngestError> {
    let base = base_url.trim_end_matches('/');
    let mut out = Vec::new();
    for path in KUBE_LIST_PATHS {
        out.extend(parse_kube_list(&get_json(http, &format!("{base}{path}"), &[], bearer)?)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn owner_chain() {
        let body = r#"{"kind":"List","items":[
            {"kind":"Deployment","metadata":{"name":"d","namespace":"ns"},"spec":{"selector":{"matchLabels":{"app":"a"}}}},
            {"kind":"ReplicaSet","metadata":{"name":"rs","namespace":"ns","ownerReferences":[{"kind":"Deployment","name":"d","uid":"1"}]}},
            {"kind":"Pod","metadata":{"name":"p1","namespace":"ns","ownerReferences":[{"kind":"ReplicaSet","name":"rs"}]},"spec":{"nodeName":"n1","containers":[{"name":"app","image":"x"}]}},
            {"kind":"Pod","metadata":{"name":"p2","namespace":"ns","ownerReferences":[{"kind":"ReplicaSet","name":"rs"}]},"spec":{"nodeName":"n2","containers":[{"name":"app"}]}}
        ]}"#;
        let objs = parse_kube_list(body).unwrap();
        assert_eq!(objs.len(), 4);
        assert!(objs[1..].iter().all(|o| o.owners.len() == 1));
        assert_eq!(objs[2].node_name.as_deref(), Some("n1"));
        assert_eq!(objs[2].containers, ["app"]);
        // Deployment selectors are not service selectors
        assert!(objs[0].selector.is_empty());
    }

    #[test]
    fn typed_list_and_unknown_kind() {
        let objs = parse_kube_list(
            r#"{"kind":"ServiceList","items":[{"metadata":{"name":"s","namespace":"ns"},"spec":{"selector":{"app":"a"}}}]}"#,
        )
        .unwrap();
        assert_eq!(objs[0].kind, EntityKind::Service);
        assert_eq!(objs[0].selector["app"], "a");
        assert!(matches!(
            parse_kube_list(r#"{"kind":"JobList","items":[{"metadata":{"name":"j"}}]}"#),
            Err(IngestError::UnknownKind { .. })
        ));
        assert!(parse_kube_list(r#"{"kind":"JobList","items":[]}"#).unwrap().is_empty());
    }
}
