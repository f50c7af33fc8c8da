#!/usr/bin/env python3
"""Writes fixtures/golden/cases.json: golden questions over the TrainTicket
fixture with a hand-written model reply for every pipeline stage.

Component-dependent cases get a `generate_no_sk` reply that guesses the
components the way a model without graph knowledge would (wrong labels or
name patterns). Some cases get a `generate_no_mk` reply with a plausible but
non-existent metric name.

After editing, re-record with:
    promkg --graph <snapshot> record
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

POD = {
    "order1": "ts-order-service-6f8d9c7b5-k2x7p",
    "order2": "ts-order-service-6f8d9c7b5-m9q4z",
    "travel1": "ts-travel-service-5c7d8f9b6-h3n8w",
    "travel2": "ts-travel-service-5c7d8f9b6-t6v1r",
    "route": "ts-route-service-7b9c6d5f8-p4k2j",
    "user": "ts-user-service-9f7b6c8d5-x2c9v",
    "payment": "ts-payment-service-5b9d7c6f8-z5t2k",
    "seat": "ts-seat-service-8f9c7d6b5-r3j8f",
    "ui": "ts-ui-dashboard-7f6b8d9c5-c9x4d",
    "basic": "ts-basic-service-9d8c6b7f4-v7b2l",
    "exporter1": "node-exporter-4fj2k",
}


def t(subj, rel, obj):
    return f"({subj}) -{rel}-> ({obj})"


def lvp(label, value):
    return f'label_value_pair:{label}="{value}"'


def has_label(metric, label, value):
    return t(f"metric:{metric}", "has_label", lvp(label, value))


def identifies(label, value, kind):
    return t(lvp(label, value), "identifies", f"{kind}:{value}")


def paths_reply(reasoning, *paths):
    body = "\n".join(paths) if paths else "none"
    return f"{reasoning}\nPaths:\n{body}"


def pairs_reply(reasoning, *pairs):
    lines = "\n".join(f"metric: {m} | component: {c}" for m, c in pairs)
    return f"{reasoning}\nMetrics:\n{lines}"


def select_reply(reasoning, *metrics):
    return f"{reasoning}\nselected: {', '.join(metrics)}"


def label_reply(*items):
    return "\n".join(f"label: {l} | values: {v}" for l, v in items)


def gen_reply(reasoning, query):
    return f"{reasoning}\nPromQL:\n```promql\n{query}\n```"


NO_PATHS = "No component is named; the question is about a metric across the whole system."


def case(id, question, gold, tags, required_metrics, required_triples, replies):
    return {
        "id": id,
        "question": question,
        "gold": gold if isinstance(gold, list) else [gold],
        "tags": tags,
        "required_metrics": required_metrics,
        "required_triples": required_triples,
        "replies": replies,
    }


def component_cases():
    out = []

    q = 'node_memory_MemAvailable_bytes{node=~"node1|node3"}'
    out.append(case(
        "g01", "What is the available memory on the nodes that host the ts-order-service pods?", q,
        ["component", "node"], ["node_memory_MemAvailable_bytes"],
        [
            t("service:ts-order-service", "targets", f"pod:{POD['order1']}"),
            t("service:ts-order-service", "targets", f"pod:{POD['order2']}"),
            t("node:node1", "hosts", f"pod:{POD['order1']}"),
            t("node:node3", "hosts", f"pod:{POD['order2']}"),
            has_label("node_memory_MemAvailable_bytes", "node", "node1"),
            has_label("node_memory_MemAvailable_bytes", "node", "node3"),
            identifies("node", "node1", "node"),
            identifies("node", "node3", "node"),
        ],
        {
            "extract_paths": paths_reply(
                "The service ts-order-service is named. Its pods are reached through targets, and the nodes that host those pods through hosts.",
                "(service:ts-order-service)-targets->(pod:?)<-hosts-(node:?)"),
            "extract_pairs": pairs_reply("Available memory is a node-level quantity.", ("available memory", "node")),
            "select_metrics": select_reply("MemAvailable is the memory available for new applications.", "node_memory_MemAvailable_bytes"),
            "generate": gen_reply("The order pods run on node1 and node3; filter the node gauge to those nodes.", q),
            "generate_no_sk": gen_reply("The nodes are not known, so match nodes whose name mentions the order service.",
                                        'node_memory_MemAvailable_bytes{node=~".*order.*"}'),
            "generate_no_mk": gen_reply("Use the node memory gauge for node1 and node3.",
                                        'node_memory_available_bytes{node=~"node1|node3"}'),
        }))

    pods = f"{POD['order1']}|{POD['order2']}"
    q = f'sum by (pod) (rate(container_cpu_usage_seconds_total{{pod=~"{pods}"}}[5m]))'
    out.append(case(
        "g02", "What is the CPU usage of each ts-order-service pod?", q,
        ["component", "pod"], ["container_cpu_usage_seconds_total"],
        [
            t("service:ts-order-service", "targets", f"pod:{POD['order1']}"),
            t("service:ts-order-service", "targets", f"pod:{POD['order2']}"),
            has_label("container_cpu_usage_seconds_total", "pod", POD["order1"]),
            has_label("container_cpu_usage_seconds_total", "pod", POD["order2"]),
        ],
        {
            "extract_paths": paths_reply(
                "The service ts-order-service is named and the question asks about the pods it targets.",
                "(service:ts-order-service)-targets->(pod:?)"),
            "extract_pairs": pairs_reply("CPU usage is measured per pod here.", ("cpu usage", "pod")),
            "select_metrics": select_reply("The cumulative CPU seconds counter gives CPU usage as a rate.", "container_cpu_usage_seconds_total"),
            "generate": gen_reply("Rate of the CPU counter per pod, for the two order pods.", q),
            "generate_no_sk": gen_reply("Filter the CPU counter by the service name.",
                                        'sum by (pod) (rate(container_cpu_usage_seconds_total{service="ts-order-service"}[5m]))'),
        }))

    q = 'node_load1{node="node2"}'
    out.append(case(
        "g03", "What is the 1-minute load average of the node running the ts-route-service pod?", q,
        ["component", "node"], ["node_load1"],
        [
            t("service:ts-route-service", "targets", f"pod:{POD['route']}"),
            t("node:node2", "hosts", f"pod:{POD['route']}"),
            has_label("node_load1", "node", "node2"),
        ],
        {
            "extract_paths": paths_reply(
                "The service ts-route-service is named; its pod is hosted on some node.",
                "(service:ts-route-service)-targets->(pod:?)<-hosts-(node:?)"),
            "extract_pairs": pairs_reply("The load average belongs to the node.", ("1-minute load average", "node")),
            "select_metrics": select_reply("node_load1 is the 1m load average.", "node_load1"),
            "generate": gen_reply("The route pod runs on node2.", q),
            "generate_no_sk": gen_reply("Select the node by the instance of the route service.",
                                        'node_load1{instance=~"ts-route-service.*"}'),
        }))

    pods = f"{POD['travel1']}|{POD['travel2']}"
    q = f'sum(increase(kube_pod_container_status_restarts_total{{pod=~"{pods}"}}[1h]))'
    out.append(case(
        "g04", "How many times have the containers of the ts-travel-service pods restarted in the last hour?", q,
        ["component", "container"], ["kube_pod_container_status_restarts_total"],
        [
            t("service:ts-travel-service", "targets", f"pod:{POD['travel1']}"),
            t("service:ts-travel-service", "targets", f"pod:{POD['travel2']}"),
            has_label("kube_pod_container_status_restarts_total", "pod", POD["travel1"]),
            has_label("kube_pod_container_status_restarts_total", "pod", POD["travel2"]),
        ],
        {
            "extract_paths": paths_reply(
                "The service ts-travel-service is named; its pods contain the containers asked about.",
                "(service:ts-travel-service)-targets->(pod:?)-contains->(container:?)"),
            "extract_pairs": pairs_reply("Restarts are counted per container.", ("container restarts", "container")),
            "select_metrics": select_reply("The restart counter is per container.", "kube_pod_container_status_restarts_total"),
            "generate": gen_reply("Increase of the restart counter over 1h for the two travel pods.", q),
            "generate_no_sk": gen_reply("Use the short container name.",
                                        'sum(increase(kube_pod_container_status_restarts_total{container="travel"}[1h]))'),
        }))

    q = f'sum by (pod) (rate(container_network_receive_bytes_total{{pod="{POD["user"]}"}}[5m]))'
    out.append(case(
        "g05", "What is the network receive rate of the pods managed by deployment ts-user-service?", q,
        ["component", "pod"], ["container_network_receive_bytes_total"],
        [
            t("deployment:ts-user-service", "manages", "replicaset:ts-user-service-9f7b6c8d5"),
            t("replicaset:ts-user-service-9f7b6c8d5", "manages", f"pod:{POD['user']}"),
            has_label("container_network_receive_bytes_total", "pod", POD["user"]),
        ],
        {
            "extract_paths": paths_reply(
                "The deployment is named. Pods are reached from a deployment through its replicaset.",
                "(deployment:ts-user-service)-manages->(replicaset:?)-manages->(pod:?)"),
            "extract_pairs": pairs_reply("Received bytes are measured per pod.", ("network bytes received", "pod")),
            "select_metrics": select_reply("The receive counter counts bytes received.", "container_network_receive_bytes_total"),
            "generate": gen_reply("The deployment has one pod; take the per-second rate.", q),
            "generate_no_sk": gen_reply("Filter by the deployment label.",
                                        'sum by (pod) (rate(container_network_receive_bytes_total{deployment="ts-user-service"}[5m]))'),
            "generate_no_mk": gen_reply("Per-second rate of received bytes for the user pod.",
                                        f'sum by (pod) (rate(container_network_received_bytes{{pod="{POD["user"]}"}}[5m]))'),
        }))

    q = 'sum(container_memory_working_set_bytes{pod="ts-order-mongo-0"})'
    out.append(case(
        "g06", "How much memory are the pods of statefulset ts-order-mongo using?", q,
        ["component", "pod"], ["container_memory_working_set_bytes"],
        [
            t("statefulset:ts-order-mongo", "manages", "pod:ts-order-mongo-0"),
            has_label("container_memory_working_set_bytes", "pod", "ts-order-mongo-0"),
        ],
        {
            "extract_paths": paths_reply(
                "The statefulset ts-order-mongo is named and manages its pods directly.",
                "(statefulset:ts-order-mongo)-manages->(pod:?)"),
            "extract_pairs": pairs_reply("Memory in use is measured per pod.", ("memory working set in use", "pod")),
            "select_metrics": select_reply("The working set is the memory actually in use.", "container_memory_working_set_bytes"),
            "generate": gen_reply("Sum the working set of the statefulset's pod.", q),
            "generate_no_sk": gen_reply("Filter by the statefulset label.",
                                        'sum(container_memory_working_set_bytes{statefulset="ts-order-mongo"})'),
        }))

    q = 'node_filesystem_avail_bytes{fstype="ext4", node="node5"}'
    out.append(case(
        "g07", "How much space is available on the ext4 filesystems of the node that runs the ts-payment-service pod?", q,
        ["component", "node"], ["node_filesystem_avail_bytes"],
        [
            t("service:ts-payment-service", "targets", f"pod:{POD['payment']}"),
            t("node:node5", "hosts", f"pod:{POD['payment']}"),
            has_label("node_filesystem_avail_bytes", "node", "node5"),
            has_label("node_filesystem_avail_bytes", "fstype", "ext4"),
        ],
        {
            "extract_paths": paths_reply(
                "The service ts-payment-service is named; the node is the one hosting its pod.",
                "(service:ts-payment-service)-targets->(pod:?)<-hosts-(node:?)"),
            "extract_pairs": pairs_reply("Free filesystem space is a node quantity.", ("filesystem space available", "node")),
            "select_metrics": select_reply("node_filesystem_avail_bytes is the space available to non-root users.", "node_filesystem_avail_bytes"),
            "semantic_labels": {"node_filesystem_avail_bytes": label_reply(("fstype", "ext4"))},
            "generate": gen_reply("The payment pod runs on node5; keep ext4 filesystems.", q),
            "generate_no_sk": gen_reply("The node is unknown; keep ext4 filesystems everywhere.",
                                        'node_filesystem_avail_bytes{fstype="ext4"}'),
        }))

    q = 'sum by (node) (rate(node_cpu_seconds_total{mode="user", node=~"node2|node4"}[5m]))'
    out.append(case(
        "g08", "How much user-mode CPU time per second do the nodes hosting ts-travel-service pods spend?", q,
        ["component", "node"], ["node_cpu_seconds_total"],
        [
            t("service:ts-travel-service", "targets", f"pod:{POD['travel1']}"),
            t("service:ts-travel-service", "targets", f"pod:{POD['travel2']}"),
            t("node:node2", "hosts", f"pod:{POD['travel1']}"),
            t("node:node4", "hosts", f"pod:{POD['travel2']}"),
            has_label("node_cpu_seconds_total", "node", "node2"),
            has_label("node_cpu_seconds_total", "node", "node4"),
            has_label("node_cpu_seconds_total", "mode", "user"),
        ],
        {
            "extract_paths": paths_reply(
                "The service ts-travel-service is named; the nodes are those hosting its pods.",
                "(service:ts-travel-service)-targets->(pod:?)<-hosts-(node:?)"),
            "extract_pairs": pairs_reply("CPU time per mode is a node metric.", ("cpu seconds in each mode", "node")),
            "select_metrics": select_reply("node_cpu_seconds_total has a mode label.", "node_cpu_seconds_total"),
            "semantic_labels": {"node_cpu_seconds_total": label_reply(("mode", "user"))},
            "generate": gen_reply("The travel pods run on node2 and node4.", q),
            "generate_no_sk": gen_reply("Without the node names, report user CPU per node for all nodes.",
                                        'sum by (node) (rate(node_cpu_seconds_total{mode="user"}[5m]))'),
        }))

    pods = "|".join([POD["exporter1"], POD["order1"], POD["seat"], POD["ui"]])
    q = f'sum by (pod) (container_memory_working_set_bytes{{pod=~"{pods}"}})'
    out.append(case(
        "g09", "What is the memory working set of the pods running on node node1?", q,
        ["component", "pod"], ["container_memory_working_set_bytes"],
        [
            t("node:node1", "hosts", f"pod:{POD['exporter1']}"),
            t("node:node1", "hosts", f"pod:{POD['order1']}"),
            t("node:node1", "hosts", f"pod:{POD['seat']}"),
            t("node:node1", "hosts", f"pod:{POD['ui']}"),
            has_label("container_memory_working_set_bytes", "pod", POD["seat"]),
        ],
        {
            "extract_paths": paths_reply("The node node1 is named and hosts the pods asked about.", "(node:node1)-hosts->(pod:?)"),
            "extract_pairs": pairs_reply("The working set is measured per pod.", ("memory working set", "pod")),
            "select_metrics": select_reply("The working set gauge matches the question.", "container_memory_working_set_bytes"),
            "generate": gen_reply("Group the working set of node1's four pods by pod.", q),
            "generate_no_sk": gen_reply("Filter the working set by node.",
                                        'sum by (pod) (container_memory_working_set_bytes{node="node1"})'),
        }))

    services = "ts-basic-service|ts-route-service|ts-seat-service|ts-ticketinfo-service"
    q = f'sum by (service) (jvm_memory_used_bytes{{area="heap", service=~"{services}"}})'
    out.append(case(
        "g10", "What is the JVM heap usage of the services that ts-travel-service sends requests to?", q,
        ["component", "service"], ["jvm_memory_used_bytes"],
        [
            t("service:ts-travel-service", "requests", "service:ts-basic-service"),
            t("service:ts-travel-service", "requests", "service:ts-route-service"),
            t("service:ts-travel-service", "requests", "service:ts-seat-service"),
            t("service:ts-travel-service", "requests", "service:ts-ticketinfo-service"),
            has_label("jvm_memory_used_bytes", "service", "ts-route-service"),
            has_label("jvm_memory_used_bytes", "area", "heap"),
        ],
        {
            "extract_paths": paths_reply(
                "The service ts-travel-service is named; the services it calls are reached through requests.",
                "(service:ts-travel-service)-requests->(service:?)"),
            "extract_pairs": pairs_reply("JVM memory is reported per service.", ("jvm heap memory used", "service")),
            "select_metrics": select_reply("jvm_memory_used_bytes with area heap.", "jvm_memory_used_bytes"),
            "semantic_labels": {"jvm_memory_used_bytes": label_reply(("area", "heap"))},
            "generate": gen_reply("Travel calls four services; sum their heap by service.", q),
            "generate_no_sk": gen_reply("The callees are unknown, so report the travel service itself.",
                                        'sum by (service) (jvm_memory_used_bytes{area="heap", service="ts-travel-service"})'),
        }))

    pods = f"{POD['order1']}|{POD['order2']}"
    q = f'sum(kube_pod_status_phase{{phase="Running", pod=~"{pods}"}})'
    out.append(case(
        "g11", "How many ts-order-service pods are in the Running phase?", q,
        ["component", "pod"], ["kube_pod_status_phase"],
        [
            t("service:ts-order-service", "targets", f"pod:{POD['order1']}"),
            t("service:ts-order-service", "targets", f"pod:{POD['order2']}"),
            has_label("kube_pod_status_phase", "pod", POD["order1"]),
            has_label("kube_pod_status_phase", "phase", "Running"),
        ],
        {
            "extract_paths": paths_reply("The service ts-order-service is named; the question counts its pods.",
                                         "(service:ts-order-service)-targets->(pod:?)"),
            "extract_pairs": pairs_reply("Pod phase is reported per pod.", ("pod phase", "pod")),
            "select_metrics": select_reply("kube_pod_status_phase is 1 for the current phase.", "kube_pod_status_phase"),
            "semantic_labels": {"kube_pod_status_phase": label_reply(("phase", "Running"))},
            "generate": gen_reply("Sum the Running phase indicator over the two order pods.", q),
            "generate_no_sk": gen_reply("Filter the phase metric by service.",
                                        'sum(kube_pod_status_phase{phase="Running", service="ts-order-service"})'),
        }))

    pods = "|".join([POD["basic"], POD["route"], POD["travel1"]])
    q = f'sum by (pod) (rate(http_server_requests_seconds_count{{pod=~"{pods}"}}[5m]))'
    out.append(case(
        "g12", "What is the HTTP request rate of the pods running on node node2?", q,
        ["component", "pod"], ["http_server_requests_seconds_count"],
        [
            t("node:node2", "hosts", f"pod:{POD['basic']}"),
            t("node:node2", "hosts", f"pod:{POD['route']}"),
            t("node:node2", "hosts", f"pod:{POD['travel1']}"),
            has_label("http_server_requests_seconds_count", "pod", POD["route"]),
        ],
        {
            "extract_paths": paths_reply("The node node2 is named and hosts the pods asked about.", "(node:node2)-hosts->(pod:?)"),
            "extract_pairs": pairs_reply("Requests are counted per pod.", ("http requests count", "pod")),
            "select_metrics": select_reply("The request counter gives the request rate.", "http_server_requests_seconds_count"),
            "generate": gen_reply("Three application pods on node2 serve HTTP; rate per pod.", q),
            "generate_no_sk": gen_reply("Filter the request counter by node.",
                                        'sum by (pod) (rate(http_server_requests_seconds_count{node="node2"}[5m]))'),
        }))
    return out


def metric_cases():
    out = []
    svc_path = lambda s: paths_reply(f"Only the service {s} is named and the metric is measured on it.", f"(service:{s})")

    q = "sum(rate(http_server_requests_seconds_count[5m]))"
    out.append(case(
        "m01", "What is the total HTTP request rate across all services?", q, ["metric"],
        ["http_server_requests_seconds_count"], [],
        {
            "extract_paths": paths_reply(NO_PATHS),
            "extract_pairs": pairs_reply("Requests are counted by every service.", ("http requests count", "ALL")),
            "select_metrics": select_reply("The request counter covers every service.", "http_server_requests_seconds_count"),
            "generate": gen_reply("Sum the per-second request rate over everything.", q),
            "generate_no_mk": gen_reply("Sum the request rate.", "sum(rate(http_requests_total[5m]))"),
        }))

    q = ('sum(rate(http_server_requests_seconds_count{service="ts-travel-service", status=~"5.."}[5m]))'
         ' / sum(rate(http_server_requests_seconds_count{service="ts-travel-service"}[5m]))')
    out.append(case(
        "m02", "What fraction of requests to ts-travel-service returned a 5xx status over the last 5 minutes?", q, ["metric"],
        ["http_server_requests_seconds_count"],
        [
            has_label("http_server_requests_seconds_count", "service", "ts-travel-service"),
            identifies("service", "ts-travel-service", "service"),
            has_label("http_server_requests_seconds_count", "status", "500"),
        ],
        {
            "extract_paths": svc_path("ts-travel-service"),
            "extract_pairs": pairs_reply("Both counts are request counts of the service.",
                                         ("failed requests count", "service"), ("total requests count", "service")),
            "select_metrics": select_reply("The request counter has a status label, so one metric serves both counts.",
                                           "http_server_requests_seconds_count"),
            "semantic_labels": {"http_server_requests_seconds_count": label_reply(("status", "500 server errors"))},
            "generate": gen_reply("Divide the 5xx request rate by the total request rate.", q),
        }))

    q = ('sum(rate(http_server_requests_seconds_sum{method="POST", service="ts-order-service"}[5m]))'
         ' / sum(rate(http_server_requests_seconds_count{method="POST", service="ts-order-service"}[5m]))')
    out.append(case(
        "m03", "What is the average latency of POST requests handled by ts-order-service?", q, ["metric"],
        ["http_server_requests_seconds_count", "http_server_requests_seconds_sum"],
        [
            has_label("http_server_requests_seconds_sum", "method", "POST"),
            has_label("http_server_requests_seconds_count", "method", "POST"),
            has_label("http_server_requests_seconds_sum", "service", "ts-order-service"),
        ],
        {
            "extract_paths": svc_path("ts-order-service"),
            "extract_pairs": pairs_reply("Average latency needs the total request time and the request count.",
                                         ("time spent handling http requests", "service"), ("http requests count", "service")),
            "select_metrics": select_reply("Average latency is the sum divided by the count.",
                                           "http_server_requests_seconds_sum", "http_server_requests_seconds_count"),
            "semantic_labels": {
                "http_server_requests_seconds_sum": label_reply(("method", "POST")),
                "http_server_requests_seconds_count": label_reply(("method", "POST")),
            },
            "generate": gen_reply("Divide the rate of the duration sum by the rate of the count.", q),
        }))

    q = 'histogram_quantile(0.99, sum by (le) (rate(http_server_requests_seconds_bucket{service="ts-route-service"}[5m])))'
    out.append(case(
        "m04", "What is the 99th percentile request latency of ts-route-service?", q, ["metric"],
        ["http_server_requests_seconds_bucket"],
        [has_label("http_server_requests_seconds_bucket", "service", "ts-route-service")],
        {
            "extract_paths": svc_path("ts-route-service"),
            "extract_pairs": pairs_reply("A latency percentile comes from the request duration histogram.",
                                         ("http request duration histogram buckets", "service")),
            "select_metrics": select_reply("Quantiles need the histogram buckets.", "http_server_requests_seconds_bucket"),
            "generate": gen_reply("histogram_quantile over the bucket rates, keeping le.", q),
        }))

    q = "sum(increase(ts_order_created_total[1h]))"
    out.append(case(
        "m05", "How many train ticket orders were created in the last hour?", q, ["metric"],
        ["ts_order_created_total"], [],
        {
            "extract_paths": paths_reply(NO_PATHS),
            "extract_pairs": pairs_reply("Created orders are counted by the application.", ("orders created", "ALL")),
            "select_metrics": select_reply("ts_order_created_total counts created orders.", "ts_order_created_total"),
            "generate": gen_reply("Increase of the counter over one hour.", q),
            "generate_no_mk": gen_reply("Increase of the order counter over one hour.", "sum(increase(orders_created_total[1h]))"),
        }))

    q = "node_memory_MemAvailable_bytes / node_memory_MemTotal_bytes < 0.1"
    out.append(case(
        "m06", "Which nodes have less than 10% of their memory available?", q, ["metric"],
        ["node_memory_MemAvailable_bytes", "node_memory_MemTotal_bytes"], [],
        {
            "extract_paths": paths_reply("No particular node is named; the question covers all nodes.",),
            "extract_pairs": pairs_reply("The ratio needs available and total memory of each node.",
                                         ("available memory", "node"), ("total memory", "node")),
            "select_metrics": select_reply("Available over total memory.", "node_memory_MemAvailable_bytes", "node_memory_MemTotal_bytes"),
            "generate": gen_reply("Compare the available/total ratio to 0.1.", q),
            "generate_no_mk": gen_reply("Compare the available/total ratio to 0.1.",
                                        "node_memory_available_bytes / node_memory_total_bytes < 0.1"),
        }))

    q = 'sum by (node) (rate(node_cpu_seconds_total{mode!="idle"}[5m]))'
    out.append(case(
        "m07", "How busy is the CPU of each node, not counting idle time?", q, ["metric"],
        ["node_cpu_seconds_total"],
        [has_label("node_cpu_seconds_total", "mode", "idle")],
        {
            "extract_paths": paths_reply("No particular node is named; the question covers all nodes."),
            "extract_pairs": pairs_reply("CPU time per mode is a node metric.", ("cpu seconds in each mode", "node")),
            "select_metrics": select_reply("node_cpu_seconds_total has the mode label.", "node_cpu_seconds_total"),
            "semantic_labels": {"node_cpu_seconds_total": label_reply(("mode", "idle"))},
            "generate": gen_reply("Exclude the idle mode and sum the rate per node.", q),
        }))

    q = "kube_deployment_status_replicas_available < kube_deployment_spec_replicas"
    out.append(case(
        "m08", "Which deployments have fewer available replicas than desired?", q, ["metric"],
        ["kube_deployment_spec_replicas", "kube_deployment_status_replicas_available"], [],
        {
            "extract_paths": paths_reply("No deployment is named; the question covers all deployments."),
            "extract_pairs": pairs_reply("Both replica counts belong to deployments.",
                                         ("available replicas", "deployment"), ("desired pods", "deployment")),
            "select_metrics": select_reply("Compare available with desired replicas.",
                                           "kube_deployment_status_replicas_available", "kube_deployment_spec_replicas"),
            "generate": gen_reply("Keep deployments where available is below the spec.", q),
        }))

    q = 'sum by (node) (rate(node_disk_read_bytes_total{device="sda"}[5m]))'
    out.append(case(
        "m09", "What is the read throughput of disk sda on each node?", q, ["metric"],
        ["node_disk_read_bytes_total"],
        [has_label("node_disk_read_bytes_total", "device", "sda")],
        {
            "extract_paths": paths_reply("No particular node is named; the question covers all nodes."),
            "extract_pairs": pairs_reply("Disk reads are counted per node device.", ("bytes read from disk", "node")),
            "select_metrics": select_reply("node_disk_read_bytes_total counts bytes read.", "node_disk_read_bytes_total"),
            "semantic_labels": {"node_disk_read_bytes_total": label_reply(("device", "sda"))},
            "generate": gen_reply("Rate of bytes read on sda, per node.", q),
        }))

    q = "up == 0"
    out.append(case(
        "m10", "Which scrape targets are down?", q, ["metric"], ["up"], [],
        {
            "extract_paths": paths_reply(NO_PATHS),
            "extract_pairs": pairs_reply("Target health is reported for every scrape target.", ("scrape target reachable", "ALL")),
            "select_metrics": select_reply("up is 0 for unreachable targets.", "up"),
            "generate": gen_reply("Targets whose up value is 0.", q),
        }))

    q = 'sum(rate(jvm_gc_pause_seconds_count{service="ts-user-service"}[5m]))'
    out.append(case(
        "m11", "How many garbage collection pauses per second does ts-user-service have?", q, ["metric"],
        ["jvm_gc_pause_seconds_count"],
        [has_label("jvm_gc_pause_seconds_count", "service", "ts-user-service")],
        {
            "extract_paths": svc_path("ts-user-service"),
            "extract_pairs": pairs_reply("GC pauses are counted by the service's JVM.", ("jvm garbage collection pauses", "service")),
            "select_metrics": select_reply("The GC pause counter.", "jvm_gc_pause_seconds_count"),
            "generate": gen_reply("Per-second rate of the pause counter for the user service.", q),
            "generate_no_mk": gen_reply("Rate of GC pauses for the user service.",
                                        'sum(rate(jvm_gc_collections_total{service="ts-user-service"}[5m]))'),
        }))

    q = "sum by (service) (hikaricp_connections_active)"
    out.append(case(
        "m12", "How many active database connections does each service hold?", q, ["metric"],
        ["hikaricp_connections_active"], [],
        {
            "extract_paths": paths_reply("No particular service is named; the question covers all services."),
            "extract_pairs": pairs_reply("Connection pools belong to services.", ("active database connections", "service")),
            "select_metrics": select_reply("The HikariCP active connections gauge.", "hikaricp_connections_active"),
            "generate": gen_reply("Sum the active connections per service.", q),
        }))
    return out


def main():
    cases = component_cases() + metric_cases()
    out = ROOT / "fixtures" / "golden" / "cases.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(cases, indent=2, ensure_ascii=False) + "\n")
    print(f"wrote {len(cases)} cases to {out}")


if __name__ == "__main__":
    main()
