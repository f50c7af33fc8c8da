#!/usr/bin/env python3
"""Writes the TrainTicket-like fixture under fixtures/trainticket.

The fixture models a small deployment of the TrainTicket benchmark system:
twelve ts-* services on six nodes, MongoDB stateful sets, a monitoring
namespace with node-exporter, kube-state-metrics and Prometheus, recorded
traces and service documentation. Output is deterministic; rerun after
editing and commit the result.

    python3 tools/gen_trainticket.py [out_dir]
"""

import json
import os
import sys

NS_APP = "train-ticket"
NS_MON = "monitoring"
NODES = [f"node{i}" for i in range(1, 7)]
NODE_IP = {n: f"10.0.0.{i + 11}" for i, n in enumerate(NODES)}

# service -> (replicaset hash, [(pod suffix, node)])
SERVICES = {
    "ts-order-service": ("6f8d9c7b5", [("k2x7p", "node1"), ("m9q4z", "node3")]),
    "ts-travel-service": ("5c7d8f9b6", [("h3n8w", "node2"), ("t6v1r", "node4")]),
    "ts-route-service": ("7b9c6d5f8", [("p4k2j", "node2")]),
    "ts-station-service": ("8d6f7c9b4", [("w7r3m", "node5")]),
    "ts-user-service": ("9f7b6c8d5", [("x2c9v", "node4")]),
    "ts-auth-service": ("6d8b7f9c4", [("q8m1n", "node6")]),
    "ts-payment-service": ("5b9d7c6f8", [("z5t2k", "node5")]),
    "ts-price-service": ("7c6f9b8d4", [("g1h6s", "node6")]),
    "ts-seat-service": ("8f9c7d6b5", [("r3j8f", "node1")]),
    "ts-ticketinfo-service": ("6b7d9f8c5", [("n4w6y", "node3")]),
    "ts-basic-service": ("9d8c6b7f4", [("v7b2l", "node2")]),
    "ts-ui-dashboard": ("7f6b8d9c5", [("c9x4d", "node1")]),
}

# stateful set -> (namespace, node of pod 0, container)
STATEFUL = {
    "ts-order-mongo": (NS_APP, "node4", "mongo"),
    "ts-travel-mongo": (NS_APP, "node6", "mongo"),
    "prometheus-k8s": (NS_MON, "node3", "prometheus"),
}
KSM = ("kube-state-metrics", "6c9b8d7f5", "s8k3t", "node5")
NODE_EXPORTER_SUFFIX = ["4fj2k", "8hd3m", "2kq9x", "7bn4v", "5xw8c", "9mz6t"]

APIS = {
    "ts-ui-dashboard": ["/index.html"],
    "ts-travel-service": ["/api/v1/travelservice/trips/left", "/api/v1/travelservice/trips/{tripId}"],
    "ts-route-service": ["/api/v1/routeservice/routes/{routeId}", "/api/v1/routeservice/routes"],
    "ts-seat-service": ["/api/v1/seatservice/seats/left_tickets"],
    "ts-ticketinfo-service": ["/api/v1/ticketinfoservice/ticketinfo"],
    "ts-order-service": [
        "/api/v1/orderservice/order/refresh",
        "/api/v1/orderservice/order",
        "/api/v1/orderservice/order/{orderId}",
    ],
    "ts-station-service": ["/api/v1/stationservice/stations/idlist"],
    "ts-auth-service": ["/api/v1/users/login"],
    "ts-user-service": ["/api/v1/userservice/users/id/{userId}"],
    "ts-payment-service": ["/api/v1/paymentservice/payment"],
    "ts-price-service": ["/api/v1/priceservice/prices/byRouteIdAndTrainType"],
    "ts-basic-service": ["/api/v1/basicservice/basic/travel"],
}

# Call trees: (service, operation, [children]).
TRACES = [
    ("ts-ui-dashboard", "/index.html", [
        ("ts-travel-service", "/api/v1/travelservice/trips/left", [
            ("ts-route-service", "/api/v1/routeservice/routes/{routeId}", []),
            ("ts-seat-service", "/api/v1/seatservice/seats/left_tickets", []),
            ("ts-ticketinfo-service", "/api/v1/ticketinfoservice/ticketinfo", []),
            ("ts-basic-service", "/api/v1/basicservice/basic/travel", [
                ("ts-station-service", "/api/v1/stationservice/stations/idlist", []),
                ("ts-price-service", "/api/v1/priceservice/prices/byRouteIdAndTrainType", []),
            ]),
        ]),
    ]),
    ("ts-ui-dashboard", "/index.html", [
        ("ts-travel-service", "/api/v1/travelservice/trips/{tripId}", [
            ("ts-route-service", "/api/v1/routeservice/routes", []),
        ]),
    ]),
    ("ts-ui-dashboard", "/index.html", [
        ("ts-order-service", "/api/v1/orderservice/order/refresh", [
            ("ts-station-service", "/api/v1/stationservice/stations/idlist", []),
        ]),
    ]),
    ("ts-ui-dashboard", "/index.html", [
        ("ts-order-service", "/api/v1/orderservice/order", [
            ("ts-user-service", "/api/v1/userservice/users/id/{userId}", []),
        ]),
    ]),
    ("ts-ui-dashboard", "/index.html", [
        ("ts-auth-service", "/api/v1/users/login", [
            ("ts-user-service", "/api/v1/userservice/users/id/{userId}", []),
        ]),
    ]),
    ("ts-ui-dashboard", "/index.html", [
        ("ts-payment-service", "/api/v1/paymentservice/payment", [
            ("ts-order-service", "/api/v1/orderservice/order/{orderId}", []),
        ]),
    ]),
]

SERVICE_DOCS = {
    "ts-ui-dashboard": "Web front end of the train ticket system; forwards user actions to the backend services.",
    "ts-travel-service": "Searches train trips between stations and reports remaining tickets for high-speed trains.",
    "ts-route-service": "Stores train routes as ordered lists of stations with distances.",
    "ts-seat-service": "Allocates seats and counts the tickets left on a trip.",
    "ts-ticketinfo-service": "Aggregates ticket information such as prices and seat classes for a trip.",
    "ts-basic-service": "Collects basic travel data (stations, train types, prices) for a trip query.",
    "ts-order-service": "Creates, queries, updates and cancels train ticket orders.",
    "ts-station-service": "Manages railway stations and resolves station names to ids.",
    "ts-auth-service": "Authenticates users at login and issues tokens.",
    "ts-user-service": "Manages user accounts and profiles.",
    "ts-payment-service": "Processes payments for ticket orders.",
    "ts-price-service": "Stores price rates per route and train type.",
}
API_DOCS = {
    "/api/v1/travelservice/trips/left": "Query high-speed trips with remaining tickets between two stations on a date.",
    "/api/v1/orderservice/order": "Create a new ticket order.",
    "/api/v1/orderservice/order/refresh": "List the orders of the logged-in user.",
    "/api/v1/users/login": "Log a user in with user name and password.",
    "/api/v1/paymentservice/payment": "Pay for an order.",
}


def pod_name(svc, rs_hash, suffix):
    return f"{svc}-{rs_hash}-{suffix}"


def kube_objects():
    """Returns {kind: [items]} in Kubernetes list format."""
    out = {k: [] for k in ["Namespace", "Node", "Deployment", "ReplicaSet", "StatefulSet", "Pod", "Service"]}
    for ns in [NS_APP, NS_MON]:
        out["Namespace"].append({"metadata": {"name": ns}})
    for n in NODES:
        out["Node"].append({"metadata": {"name": n, "labels": {"kubernetes.io/hostname": n}}})

    def deployment(name, ns, rs_hash, pods, container):
        rs = f"{name}-{rs_hash}"
        out["Deployment"].append({
            "metadata": {"name": name, "namespace": ns, "labels": {"app": name}},
            "spec": {"replicas": len(pods), "selector": {"matchLabels": {"app": name}}},
        })
        out["ReplicaSet"].append({
            "metadata": {
                "name": rs, "namespace": ns, "labels": {"app": name, "pod-template-hash": rs_hash},
                "ownerReferences": [{"apiVersion": "apps/v1", "kind": "Deployment", "name": name, "controller": True}],
            },
            "spec": {"replicas": len(pods), "selector": {"matchLabels": {"app": name, "pod-template-hash": rs_hash}}},
        })
        for suffix, node in pods:
            out["Pod"].append({
                "metadata": {
                    "name": pod_name(name, rs_hash, suffix), "namespace": ns,
                    "labels": {"app": name, "pod-template-hash": rs_hash},
                    "ownerReferences": [{"apiVersion": "apps/v1", "kind": "ReplicaSet", "name": rs, "controller": True}],
                },
                "spec": {"nodeName": node, "containers": [{"name": container, "image": f"codewisdom/{container}:1.0.0"}]},
            })

    for svc, (h, pods) in SERVICES.items():
        deployment(svc, NS_APP, h, pods, svc)
        out["Service"].append({
            "metadata": {"name": svc, "namespace": NS_APP, "labels": {"app": svc}},
            "spec": {"selector": {"app": svc}, "ports": [{"port": 8080, "targetPort": 8080}]},
        })
    name, h, suffix, node = KSM
    deployment(name, NS_MON, h, [(suffix, node)], name)
    out["Service"].append({
        "metadata": {"name": name, "namespace": NS_MON},
        "spec": {"selector": {"app": name}, "ports": [{"port": 8080}]},
    })
    for sts, (ns, node, container) in STATEFUL.items():
        out["StatefulSet"].append({
            "metadata": {"name": sts, "namespace": ns, "labels": {"app": sts}},
            "spec": {"replicas": 1, "serviceName": sts, "selector": {"matchLabels": {"app": sts}}},
        })
        containers = [{"name": container}]
        if sts == "prometheus-k8s":
            containers.append({"name": "config-reloader"})
        out["Pod"].append({
            "metadata": {
                "name": f"{sts}-0", "namespace": ns, "labels": {"app": sts},
                "ownerReferences": [{"apiVersion": "apps/v1", "kind": "StatefulSet", "name": sts, "controller": True}],
            },
            "spec": {"nodeName": node, "containers": containers},
        })
        out["Service"].append({
            "metadata": {"name": sts, "namespace": ns},
            "spec": {"selector": {"app": sts}, "clusterIP": "None"},
        })
    # node-exporter runs as a DaemonSet; DaemonSets are outside the graph
    # schema, so its pods keep an owner the build ignores.
    for node, suffix in zip(NODES, NODE_EXPORTER_SUFFIX):
        out["Pod"].append({
            "metadata": {
                "name": f"node-exporter-{suffix}", "namespace": NS_MON, "labels": {"app": "node-exporter"},
                "ownerReferences": [{"apiVersion": "apps/v1", "kind": "DaemonSet", "name": "node-exporter", "controller": True}],
            },
            "spec": {"nodeName": node, "containers": [{"name": "node-exporter"}]},
        })
    return out


def app_pods():
    """(service, pod) for every ts-* pod."""
    for svc, (h, pods) in SERVICES.items():
        for suffix, _ in pods:
            yield svc, pod_name(svc, h, suffix)


def all_pods(kube):
    """(namespace, pod, node, [containers]) for every pod."""
    for p in kube["Pod"]:
        md = p["metadata"]
        yield md["namespace"], md["name"], p["spec"]["nodeName"], [c["name"] for c in p["spec"]["containers"]]


METRICS = {}
SERIES = []


def metric(name, mtype, help_text):
    METRICS[name] = [{"type": mtype, "help": help_text, "unit": ""}]


def series(name, **labels):
    s = {"__name__": name}
    s.update(labels)
    SERIES.append(s)


def node_exporter(kube):
    exporters = {n: f"node-exporter-{s}" for n, s in zip(NODES, NODE_EXPORTER_SUFFIX)}
    metric("node_cpu_seconds_total", "counter", "Seconds the CPUs spent in each mode.")
    metric("node_memory_MemAvailable_bytes", "gauge", "Memory information field MemAvailable_bytes: memory available for starting new applications.")
    metric("node_memory_MemTotal_bytes", "gauge", "Memory information field MemTotal_bytes: total usable memory.")
    metric("node_filesystem_avail_bytes", "gauge", "Filesystem space available to non-root users in bytes.")
    metric("node_filesystem_size_bytes", "gauge", "Filesystem size in bytes.")
    metric("node_network_receive_bytes_total", "counter", "Network device statistic receive_bytes.")
    metric("node_network_transmit_bytes_total", "counter", "Network device statistic transmit_bytes.")
    metric("node_load1", "gauge", "1m load average.")
    metric("node_disk_read_bytes_total", "counter", "The total number of bytes read successfully.")
    for node in NODES:
        base = dict(job="node-exporter", instance=f"{NODE_IP[node]}:9100", namespace=NS_MON,
                    pod=exporters[node], container="node-exporter", node=node)
        for cpu in ["0", "1", "2", "3"]:
            for mode in ["idle", "iowait", "irq", "nice", "softirq", "steal", "system", "user"]:
                series("node_cpu_seconds_total", cpu=cpu, mode=mode, **base)
        for m in ["node_memory_MemAvailable_bytes", "node_memory_MemTotal_bytes", "node_load1"]:
            series(m, **base)
        for device, mount, fstype in [("/dev/sda1", "/", "ext4"), ("/dev/sdb1", "/var/lib/docker", "xfs"), ("tmpfs", "/run", "tmpfs")]:
            for m in ["node_filesystem_avail_bytes", "node_filesystem_size_bytes"]:
                series(m, device=device, mountpoint=mount, fstype=fstype, **base)
        for device in ["eth0", "lo", "cni0"]:
            for m in ["node_network_receive_bytes_total", "node_network_transmit_bytes_total"]:
                series(m, device=device, **base)
        for device in ["sda", "sdb"]:
            series("node_disk_read_bytes_total", device=device, **base)


def cadvisor(kube):
    metric("container_cpu_usage_seconds_total", "counter", "Cumulative cpu time consumed in seconds.")
    metric("container_memory_working_set_bytes", "gauge", "Current working set of the container in bytes.")
    metric("container_memory_usage_bytes", "gauge", "Current memory usage in bytes, including all memory regardless of when it was accessed.")
    metric("container_network_receive_bytes_total", "counter", "Cumulative count of bytes received.")
    metric("container_network_transmit_bytes_total", "counter", "Cumulative count of bytes transmitted.")
    metric("container_fs_reads_bytes_total", "counter", "Cumulative count of bytes read.")
    metric("container_spec_memory_limit_bytes", "gauge", "Memory limit for the container.")
    metric("container_cpu_cfs_throttled_seconds_total", "counter", "Total time duration the container has been throttled.")
    for ns, pod, node, containers in all_pods(kube):
        base = dict(job="kubelet", instance=f"{NODE_IP[node]}:10250", namespace=ns, pod=pod)
        for c in containers:
            cb = dict(container=c, image=f"docker.io/codewisdom/{c}:1.0.0", **base)
            series("container_cpu_usage_seconds_total", cpu="total", **cb)
            for m in ["container_memory_working_set_bytes", "container_memory_usage_bytes",
                      "container_spec_memory_limit_bytes", "container_cpu_cfs_throttled_seconds_total"]:
                series(m, **cb)
            series("container_fs_reads_bytes_total", device="/dev/sda", **cb)
        for m in ["container_network_receive_bytes_total", "container_network_transmit_bytes_total"]:
            series(m, interface="eth0", **base)


def kube_state_metrics(kube):
    ksm_pod = f"{KSM[0]}-{KSM[1]}-{KSM[2]}"
    base = dict(job="kube-state-metrics", instance=f"{ksm_pod}:8080")
    metric("kube_pod_status_phase", "gauge", "The pods current phase.")
    metric("kube_pod_container_status_restarts_total", "counter", "The number of container restarts per container.")
    metric("kube_deployment_status_replicas_available", "gauge", "The number of available replicas per deployment.")
    metric("kube_deployment_spec_replicas", "gauge", "Number of desired pods for a deployment.")
    metric("kube_pod_info", "gauge", "Information about pod.")
    metric("kube_node_status_condition", "gauge", "The condition of a cluster node.")
    metric("kube_statefulset_status_replicas_ready", "gauge", "The number of ready replicas per StatefulSet.")
    for ns, pod, node, containers in all_pods(kube):
        for phase in ["Pending", "Running", "Succeeded", "Failed", "Unknown"]:
            series("kube_pod_status_phase", namespace=ns, pod=pod, phase=phase, **base)
        for c in containers:
            series("kube_pod_container_status_restarts_total", namespace=ns, pod=pod, container=c, **base)
        series("kube_pod_info", namespace=ns, pod=pod, node=node, host_ip=NODE_IP[node], **base)
    for d in kube["Deployment"]:
        md = d["metadata"]
        for m in ["kube_deployment_status_replicas_available", "kube_deployment_spec_replicas"]:
            series(m, namespace=md["namespace"], deployment=md["name"], **base)
    for n in NODES:
        for cond in ["Ready", "MemoryPressure", "DiskPressure", "PIDPressure"]:
            for status in ["true", "false", "unknown"]:
                series("kube_node_status_condition", node=n, condition=cond, status=status, **base)
    for sts, (ns, _, _) in STATEFUL.items():
        series("kube_statefulset_status_replicas_ready", namespace=ns, statefulset=sts, **base)


def app_metrics():
    metric("http_server_requests_seconds_count", "counter", "Number of HTTP server requests handled.")
    metric("http_server_requests_seconds_sum", "counter", "Total time spent handling HTTP server requests, in seconds.")
    metric("http_server_requests_seconds_bucket", "counter", "Histogram buckets of HTTP server request durations in seconds.")
    metric("jvm_memory_used_bytes", "gauge", "The amount of used memory in the JVM.")
    metric("jvm_gc_pause_seconds_count", "counter", "Number of JVM garbage collection pauses.")
    metric("jvm_threads_live_threads", "gauge", "The current number of live threads including both daemon and non-daemon threads.")
    metric("process_cpu_usage", "gauge", "The recent cpu usage for the JVM process.")
    metric("hikaricp_connections_active", "gauge", "Active database connections in the HikariCP pool.")
    metric("ts_order_created_total", "counter", "Number of train ticket orders created.")
    buckets = ["0.005", "0.01", "0.05", "0.1", "0.25", "0.5", "1.0", "2.5", "+Inf"]
    for svc, pod in app_pods():
        base = dict(job="train-ticket", namespace=NS_APP, service=svc, pod=pod, instance=f"{pod}:8080")
        for uri in APIS[svc]:
            method = "POST" if uri.endswith(("/login", "/order", "/payment", "/left")) else "GET"
            for status, outcome in [("200", "SUCCESS"), ("400", "CLIENT_ERROR"), ("500", "SERVER_ERROR"), ("503", "SERVER_ERROR")]:
                exc = "None" if status == "200" else ("IllegalArgumentException" if status == "400" else "RuntimeException")
                lb = dict(method=method, uri=uri, status=status, outcome=outcome, exception=exc, **base)
                series("http_server_requests_seconds_count", **lb)
                series("http_server_requests_seconds_sum", **lb)
                if status == "200":
                    for le in buckets:
                        series("http_server_requests_seconds_bucket", le=le, **lb)
        for area, ids in [("heap", ["G1 Eden Space", "G1 Old Gen", "G1 Survivor Space"]),
                          ("nonheap", ["Metaspace", "CodeHeap 'non-nmethods'", "Compressed Class Space"])]:
            for i in ids:
                series("jvm_memory_used_bytes", area=area, id=i, **base)
        for action, cause in [("end of minor GC", "G1 Evacuation Pause"), ("end of major GC", "G1 Compaction Pause")]:
            series("jvm_gc_pause_seconds_count", action=action, cause=cause, **base)
        series("jvm_threads_live_threads", **base)
        series("process_cpu_usage", **base)
        series("hikaricp_connections_active", pool="HikariPool-1", **base)
        if svc == "ts-order-service":
            for t in ["G", "D", "Z", "T", "K"]:
                series("ts_order_created_total", train_type=t, **base)


def up_metric(kube):
    metric("up", "gauge", "1 if the target is reachable and its metrics were scraped, 0 otherwise.")
    for _, pod in app_pods():
        series("up", job="train-ticket", instance=f"{pod}:8080")
    for n in NODES:
        series("up", job="node-exporter", instance=f"{NODE_IP[n]}:9100")
        series("up", job="kubelet", instance=f"{NODE_IP[n]}:10250")
    series("up", job="kube-state-metrics", instance=f"{KSM[0]}-{KSM[1]}-{KSM[2]}:8080")


def spans():
    out = []
    for t, root in enumerate(TRACES):
        counter = [0]

        def walk(node, parent):
            counter[0] += 1
            sid = f"{t + 1:02x}{counter[0]:02x}"
            svc, op, children = node
            rec = {"trace_id": f"4bf92f3577b34da6a3ce929d0e0e{t + 1:04x}", "span_id": sid}
            if parent is not None:
                rec["parent_span_id"] = parent
            rec["service"] = svc
            rec["operation"] = op
            out.append(rec)
            for c in children:
                walk(c, sid)

        walk(root, None)
    # one extra span per API so every provided operation appears in traces
    seen = {s["operation"] for s in out}
    extra = 0
    for svc, ops in APIS.items():
        for op in ops:
            if op not in seen:
                extra += 1
                out.append({"trace_id": f"4bf92f3577b34da6a3ce929d0e0f{extra:04x}", "span_id": "01",
                            "service": svc, "operation": op})
    return out


def docs():
    out = [{"kind": "Service", "name": s, "description": d} for s, d in SERVICE_DOCS.items()]
    out += [{"kind": "API", "name": a, "description": d} for a, d in API_DOCS.items()]
    return out


def write_json(path, obj, pretty=True):
    with open(path, "w") as f:
        if pretty:
            json.dump(obj, f, indent=2, sort_keys=False)
            f.write("\n")
        else:
            f.write(json.dumps(obj, separators=(",", ":")) + "\n")


def main():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(root, "fixtures", "trainticket")
    for sub in ["prometheus", "kubernetes", "traces", "docs"]:
        os.makedirs(os.path.join(out, sub), exist_ok=True)
    kube = kube_objects()
    node_exporter(kube)
    cadvisor(kube)
    kube_state_metrics(kube)
    app_metrics()
    up_metric(kube)
    write_json(os.path.join(out, "prometheus", "metadata.json"),
               {"status": "success", "data": dict(sorted(METRICS.items()))})
    with open(os.path.join(out, "prometheus", "series.json"), "w") as f:
        f.write('{"status":"success","data":[\n')
        f.write(",\n".join(json.dumps(s, separators=(",", ":")) for s in SERIES))
        f.write("\n]}\n")
    for i, (kind, items) in enumerate(kube.items()):
        api = "v1" if kind in ("Namespace", "Node", "Pod", "Service") else "apps/v1"
        write_json(os.path.join(out, "kubernetes", f"{i:02d}-{kind.lower()}s.json"),
                   {"apiVersion": api, "kind": f"{kind}List", "items": items})
    with open(os.path.join(out, "traces", "spans.jsonl"), "w") as f:
        for s in spans():
            f.write(json.dumps(s) + "\n")
    with open(os.path.join(out, "docs", "docs.jsonl"), "w") as f:
        for d in docs():
            f.write(json.dumps(d) + "\n")
    print(f"{len(METRICS)} metrics, {len(SERIES)} series, "
          f"{sum(len(v) for v in kube.values())} kube objects -> {out}")


if __name__ == "__main__":
    main()
