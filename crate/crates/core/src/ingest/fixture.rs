//! Writing a bundle out in the fixture-directory layout, so generated
//! bundles can be loaded back exactly like recorded ones.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{IngestError, KubeObject, SourceBundle};
use crate::graph::EntityKind;

fn kube_item(o: &KubeObject) -> Value {
    let mut metadata = Map::new();
    metadata.insert("name".into(), json!(o.name));
    if let Some(ns) = &o.namespace {
        metadata.insert("namespace".into(), json!(ns));
    }
    if !o.labels.is_empty() {
        metadata.insert("labels".into(), json!(o.labels));
    }
    if !o.owners.is_empty() {
        let owners: Vec<Value> = o
            .owners
            .iter()
            .map(|r| json!({"kind": r.kind.as_str(), "name": r.name}))
            .collect();
        metadata.insert("ownerReferences".into(), Value::Array(owners));
    }
    let mut spec = Map::new();
    if let Some(n) = &o.node_name {
        spec.insert("nodeName".into(), json!(n));
    }
    if !o.containers.is_empty() {
        let cs: Vec<Value> = o.containers.iter().map(|c| json!({"name": c})).collect();
        spec.insert("containers".into(), Value::Array(cs));
    }
    if !o.selector.is_empty() {
        spec.insert("selector".into(), json!(o.selector));
    }
    json!({"kind": o.kind.as_str(), "metadata": metadata, "spec": spec})
}

/// Series whose label sets union to exactly each metric's label map: series
/// `k` takes the `k`-th value (cycling) of every label.
fn series_of(bundle: &SourceBundle) -> Vec<BTreeMap<String, String>> {
    let mut out = Vec::new();
    for (name, meta) in &bundle.metrics {
        let n = meta.labels.values().map(|v| v.len()).max().unwrap_or(0).max(1);
        for k in 0..n {
            let mut s = BTreeMap::from([("__name__".to_string(), name.clone())]);
            for (label, values) in &meta.labels {
                if let Some(v) = values.iter().nth(k % values.len().max(1)) {
                    s.insert(label.clone(), v.clone());
                }
            }
            out.push(s);
        }
    }
    out
}

fn write(path: &Path, text: String) -> Result<(), IngestError> {
    std::fs::write(path, text).map_err(|e| IngestError::io(path, e))
}

fn mkdir(path: &Path) -> Result<(), IngestError> {
    std::fs::create_dir_all(path).map_err(|e| IngestError::io(path, e))
}

/// Writes `bundle` under `dir` (see [`super::SourceConfig::from_fixture_dir`]).
/// Kubernetes objects go to one typed list file per kind.
pub fn write_fixture_dir(bundle: &SourceBundle, dir: &Path) -> Result<(), IngestError> {
    for sub in ["prometheus", "kubernetes", "traces", "docs"] {
        mkdir(&dir.join(sub))?;
    }
    let metadata: BTreeMap<&str, Value> = bundle
        .metrics
        .iter()
        .map(|(n, m)| (n.as_str(), json!([{"type": m.metric_type, "help": m.help, "unit": ""}])))
        .collect();
    write(
        &dir.join("prometheus/metadata.json"),
        serde_json::to_string_pretty(&json!({"status": "success", "data": metadata})).expect("json"),
    )?;
    write(
        &dir.join("prometheus/series.json"),
        serde_json::to_string(&json!({"status": "success", "data": series_of(bundle)})).expect("json"),
    )?;
    for (i, kind) in EntityKind::ALL.iter().enumerate() {
        let items: Vec<Value> = bundle
            .kube_objects
            .iter()
            .filter(|o| o.kind == *kind)
            .map(kube_item)
            .collect();
        if items.is_empty() {
            continue;
        }
        let list = json!({"apiVersion": "v1", "kind": format!("{}List", kind.as_str()), "items": items});
        write(
            &dir.join(format!("kubernetes/{i:02}-{}.json", kind.slug())),
            serde_json::to_string_pretty(&list).expect("json"),
        )?;
    }
    let jsonl = |rows: Vec<String>| rows.into_iter().map(|r| r + "\n").collect::<String>();
    write(
        &dir.join("traces/spans.jsonl"),
        jsonl(bundle.spans.iter().map(|s| serde_json::to_string(s).expect("json")).collect()),
    )?;
    write(
        &dir.join("docs/docs.jsonl"),
        jsonl(bundle.docs.iter().map(|d| serde_json::to_string(d).expect("json")).collect()),
    )?;
    Ok(())
}
