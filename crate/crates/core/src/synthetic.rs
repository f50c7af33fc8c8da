//! A deterministic source bundle with a fixed, known composition, sized
//! like a mid-size microservice deployment: 209 metrics with 4 to 16
//! labels each, 2,489 distinct label-value pairs, 147 pods over 6 nodes in
//! 8 namespaces, and so on (see [`REFERENCE_SCALE`]).
//!
//! Used for scale tests and as a target for `promkg build`.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::EntityKind;
use crate::ingest::{DocEntry, KubeObject, MetricMeta, SourceBundle, Span};

/// Composition of a bundle: how many entities of each kind a build of it
/// must produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    pub namespaces: usize,
    pub nodes: usize,
    pub deployments: usize,
    pub replica_sets: usize,
    pub stateful_sets: usize,
    pub pods: usize,
    pub containers: usize,
    pub services: usize,
    pub apis: usize,
    pub metrics: usize,
    pub label_value_pairs: usize,
}

pub const REFERENCE_SCALE: Scale = Scale {
    namespaces: 8,
    nodes: 6,
    deployments: 140,
    replica_sets: 55,
    stateful_sets: 7,
    pods: 147,
    containers: 163,
    services: 77,
    apis: 140,
    metrics: 209,
    label_value_pairs: 2_489,
};

impl Scale {
    pub fn expected_counts(&self) -> BTreeMap<EntityKind, usize> {
        BTreeMap::from([
            (EntityKind::Namespace, self.namespaces),
            (EntityKind::Node, self.nodes),
            (EntityKind::Deployment, self.deployments),
            (EntityKind::ReplicaSet, self.replica_sets),
            (EntityKind::StatefulSet, self.stateful_sets),
            (EntityKind::Pod, self.pods),
            (EntityKind::Container, self.containers),
            (EntityKind::Service, self.services),
            (EntityKind::Api, self.apis),
            (EntityKind::Metric, self.metrics),
            (EntityKind::LabelValuePair, self.label_value_pairs),
        ])
    }
}

#[derive(Debug, thiserror::Error)]
#[error("scale is not realisable: {0}")]
pub struct ScaleError(String);

const MIN_LABELS: usize = 4;
const MAX_LABELS: usize = 16;
/// Labels every metric carries.
const BASE_LABELS: [&str; 4] = ["job", "instance", "namespace", "pod"];
/// Further labels; metric `j` adds the first `j % 13` of them.
const EXTRA_LABELS: [&str; 12] = [
    "node",
    "container",
    "service",
    "deployment",
    "method",
    "status",
    "le",
    "quantile",
    "device",
    "mode",
    "cpu",
    "uri",
];

fn check(cond: bool, msg: &str) -> Result<(), ScaleError> {
    if cond {
        Ok(())
    } else {
        Err(ScaleError(msg.into()))
    }
}

/// Builds a bundle whose graph has exactly the entity counts in `scale`.
///
/// Layout: deployment `i` owns replica set `i` for `i < replica_sets`;
/// replica sets share the pods left after every stateful set takes two;
/// the first `containers - pods` pods get a sidecar. Service `j` selects
/// the pods of workload `j` when there is one. Traces: the first
/// `apis / 2` services provide two operations each; every operation is
/// called once from the next service's first operation.
pub fn generate(scale: &Scale) -> Result<SourceBundle, ScaleError> {
    check(scale.namespaces >= 1 && scale.nodes >= 1, "need a namespace and a node")?;
    check(scale.replica_sets <= scale.deployments, "more replica sets than deployments")?;
    let sts_pods = 2 * scale.stateful_sets;
    check(scale.pods >= sts_pods + scale.replica_sets, "too few pods for the workloads")?;
    check(
        scale.containers >= scale.pods && scale.containers <= 2 * scale.pods,
        "containers must be within [pods, 2*pods]",
    )?;
    check(
        scale.apis.is_multiple_of(2) && scale.apis / 2 <= scale.services && scale.apis >= 4,
        "apis must be even, >= 4, <= 2*services",
    )?;
    check(scale.metrics > EXTRA_LABELS.len(), "too few metrics to carry every label")?;

    let ns = |i: usize| format!("ns-{}", i % scale.namespaces);
    let mut kube: Vec<KubeObject> = Vec::new();
    for i in 0..scale.namespaces {
        kube.push(KubeObject::new(EntityKind::Namespace, format!("ns-{i}")));
    }
    for i in 0..scale.nodes {
        kube.push(KubeObject::new(EntityKind::Node, format!("node-{}", i + 1)));
    }

    let mut pods: Vec<KubeObject> = Vec::new();
    let mut workload_apps: Vec<(String, String)> = Vec::new(); // (app, namespace)
    for i in 0..scale.deployments {
        kube.push(KubeObject::new(EntityKind::Deployment, format!("deploy-{i}")).in_namespace(&ns(i)));
    }
    let rs_pods = scale.pods - sts_pods;
    for i in 0..scale.replica_sets {
        let rs = format!("deploy-{i}-5d8f");
        kube.push(
            KubeObject::new(EntityKind::ReplicaSet, &rs)
                .in_namespace(&ns(i))
                .owned_by(EntityKind::Deployment, &format!("deploy-{i}")),
        );
        let n = rs_pods / scale.replica_sets + usize::from(i < rs_pods % scale.replica_sets);
        let app = format!("deploy-{i}");
        for k in 0..n {
            let mut p = KubeObject::new(EntityKind::Pod, format!("{rs}-{k}"))
                .in_namespace(&ns(i))
                .owned_by(EntityKind::ReplicaSet, &rs);
            p.labels.insert("app".into(), app.clone());
            p.containers.push(app.clone());
            pods.push(p);
        }
        workload_apps.push((app, ns(i)));
    }
    for j in 0..scale.stateful_sets {
        let sts = format!("sts-{j}");
        let namespace = ns(scale.replica_sets + j);
        kube.push(KubeObject::new(EntityKind::StatefulSet, &sts).in_namespace(&namespace));
        for k in 0..2 {
            let mut p = KubeObject::new(EntityKind::Pod, format!("{sts}-{k}"))
                .in_namespace(&namespace)
                .owned_by(EntityKind::StatefulSet, &sts);
            p.labels.insert("app".into(), sts.clone());
            p.containers.push(sts.clone());
            pods.push(p);
        }
        workload_apps.push((sts, namespace));
    }
    for (i, p) in pods.iter_mut().enumerate() {
        p.node_name = Some(format!("node-{}", i % scale.nodes + 1));
        if i < scale.containers - scale.pods {
            p.containers.push("log-agent".into());
        }
    }
    for j in 0..scale.services {
        let mut s = KubeObject::new(EntityKind::Service, format!("svc-{j}"));
        match workload_apps.get(j) {
            Some((app, namespace)) => {
                s = s.in_namespace(namespace);
                s.selector.insert("app".into(), app.clone());
            }
            None => s = s.in_namespace(&ns(j)),
        }
        kube.push(s);
    }
    // Group by kind so the bundle survives a fixture round trip unchanged.
    kube.extend(pods.iter().cloned());
    kube.sort_by_key(|o| EntityKind::ALL.iter().position(|k| *k == o.kind));

    // Traces.
    let providers = scale.apis / 2;
    let op = |svc: usize, k: usize| format!("/api/v1/svc-{svc}/op-{k}");
    let mut spans = Vec::new();
    for s in 0..providers {
        for k in 0..2 {
            let caller = (s + 1) % providers;
            let trace_id = format!("t-{s}-{k}");
            spans.push(Span {
                trace_id: trace_id.clone(),
                span_id: "1".into(),
                parent_span_id: None,
                service: format!("svc-{caller}"),
                operation: op(caller, 0),
            });
            spans.push(Span {
                trace_id,
                span_id: "2".into(),
                parent_span_id: Some("1".into()),
                service: format!("svc-{s}"),
                operation: op(s, k),
            });
        }
    }
    let docs = (0..scale.services)
        .map(|j| DocEntry {
            kind: EntityKind::Service,
            name: format!("svc-{j}"),
            description: format!("Synthetic service number {j}."),
        })
        .collect();

    let metrics = metrics(scale, &pods)?;
    Ok(SourceBundle {
        metrics,
        kube_objects: kube,
        spans,
        docs,
    })
}

fn metrics(scale: &Scale, pods: &[KubeObject]) -> Result<BTreeMap<String, MetricMeta>, ScaleError> {
    let mut values: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let set = |v: &mut BTreeMap<&str, Vec<String>>, l: &'static str, xs: Vec<String>| {
        v.insert(l, xs);
    };
    set(
        &mut values,
        "job",
        ["node-exporter", "cadvisor", "kube-state-metrics", "app", "prometheus"]
            .map(String::from)
            .to_vec(),
    );
    set(
        &mut values,
        "instance",
        pods.iter().map(|p| format!("{}:8080", p.name)).collect(),
    );
    set(
        &mut values,
        "namespace",
        (0..scale.namespaces).map(|i| format!("ns-{i}")).collect(),
    );
    set(&mut values, "pod", pods.iter().map(|p| p.name.clone()).collect());
    set(
        &mut values,
        "node",
        (0..scale.nodes).map(|i| format!("node-{}", i + 1)).collect(),
    );
    let containers: BTreeSet<String> = pods.iter().flat_map(|p| p.containers.iter().cloned()).collect();
    set(&mut values, "container", containers.into_iter().collect());
    set(
        &mut values,
        "service",
        (0..scale.services).map(|j| format!("svc-{j}")).collect(),
    );
    set(
        &mut values,
        "deployment",
        (0..scale.deployments).map(|i| format!("deploy-{i}")).collect(),
    );
    set(
        &mut values,
        "method",
        ["GET", "POST", "PUT", "DELETE", "PATCH"].map(String::from).to_vec(),
    );
    set(
        &mut values,
        "status",
        ["200", "201", "400", "404", "500", "503"].map(String::from).to_vec(),
    );
    set(
        &mut values,
        "le",
        [
            "0.005", "0.01", "0.025", "0.05", "0.1", "0.25", "0.5", "1", "2.5", "5", "10", "+Inf",
        ]
        .map(String::from)
        .to_vec(),
    );
    set(&mut values, "quantile", ["0.5", "0.9", "0.99"].map(String::from).to_vec());
    set(&mut values, "device", ["sda", "sdb", "eth0", "lo"].map(String::from).to_vec());
    set(
        &mut values,
        "mode",
        ["user", "system", "idle", "iowait", "irq", "softirq", "steal", "nice"]
            .map(String::from)
            .to_vec(),
    );
    set(&mut values, "cpu", (0..8).map(|i| i.to_string()).collect());
    let fixed: usize = values.values().map(Vec::len).sum();
    check(
        scale.label_value_pairs > fixed,
        &format!("label_value_pairs must exceed {fixed}"),
    )?;
    set(
        &mut values,
        "uri",
        (0..scale.label_value_pairs - fixed)
            .map(|i| format!("/api/v1/path-{i}"))
            .collect(),
    );

    let label_sets: Vec<Vec<&str>> = (0..scale.metrics)
        .map(|j| {
            let extra = j % (EXTRA_LABELS.len() + 1);
            BASE_LABELS.iter().chain(&EXTRA_LABELS[..extra]).copied().collect()
        })
        .collect();
    debug_assert!(label_sets.iter().all(|s| (MIN_LABELS..=MAX_LABELS).contains(&s.len())));

    // For each label, its carriers split its values round-robin; each
    // carrier also gets one value so no metric has an empty label.
    let mut out: BTreeMap<String, MetricMeta> = BTreeMap::new();
    let types = ["counter", "gauge", "histogram", "summary"];
    let mut per_metric: Vec<BTreeMap<String, BTreeSet<String>>> = vec![BTreeMap::new(); scale.metrics];
    for (label, vs) in &values {
        let carriers: Vec<usize> = (0..scale.metrics).filter(|j| label_sets[*j].contains(label)).collect();
        for (ci, &j) in carriers.iter().enumerate() {
            let mut mine: BTreeSet<String> = vs.iter().skip(ci).step_by(carriers.len()).cloned().collect();
            mine.insert(vs[ci % vs.len()].clone());
            per_metric[j].insert(label.to_string(), mine);
        }
    }
    for (j, labels) in per_metric.into_iter().enumerate() {
        let t = types[j % types.len()];
        let suffix = match t {
            "counter" => "_total",
            "histogram" => "_seconds",
            _ => "",
        };
        out.insert(
            format!("synthetic_metric_{j:03}{suffix}"),
            MetricMeta {
                metric_type: t.into(),
                help: format!("Synthetic {t} number {j}."),
                labels,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_graph, LinkingConfig};

    #[test]
    fn small_scale_counts() {
        let scale = Scale {
            namespaces: 2,
            nodes: 2,
            deployments: 5,
            replica_sets: 3,
            stateful_sets: 1,
            pods: 9,
            containers: 11,
            services: 6,
            apis: 8,
            metrics: 20,
            label_value_pairs: 150,
        };
        let (_, report) = build_graph(&generate(&scale).unwrap(), &LinkingConfig::default()).unwrap();
        for (kind, n) in scale.expected_counts() {
            assert_eq!(report.entity_count(kind), n, "{kind}");
        }
    }

    #[test]
    fn unrealisable_scale() {
        let mut s = REFERENCE_SCALE;
        s.label_value_pairs = 10;
        assert!(generate(&s).is_err());
        let mut s = REFERENCE_SCALE;
        s.replica_sets = s.deployments + 1;
        assert!(generate(&s).is_err());
    }
}
