//! Prometheus metric metadata.
//!
//! Two standard API responses are combined:
//!
//! - `GET /api/v1/metadata` → `{"status":"success","data":{"<metric>":[{"type","help","unit"}, ...]}}`
//! - `GET /api/v1/series?match[]={__name__=~".+"}` → `{"status":"success","data":[{"__name__":"<metric>","<label>":"<value>", ...}, ...]}`
//!
//! Fixture files hold exactly these response bodies.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::fetch::{get_json, read_file};
use super::{IngestError, MetricMeta};

const SOURCE: &str = "prometheus";

/// Series lookback passed to `/api/v1/series` (`start`/`end` accept RFC 3339
/// or Unix timestamps, as Prometheus does).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeWindow {
    pub start: Option<String>,
    pub end: Option<String>,
}

#[derive(Deserialize)]
struct Envelope {
    status: String,
    #[serde(default)]
    data: Value,
    #[serde(default)]
    error: Option<String>,
}

fn unwrap_envelope(body: &str, what: &str) -> Result<Value, IngestError> {
    let env: Envelope = serde_json::from_str(body).map_err(|e| IngestError::malformed(SOURCE, format!("{what}: {e}")))?;
    if env.status != "success" {
        return Err(IngestError::malformed(
            SOURCE,
            format!("{what}: status {:?}: {}", env.status, env.error.unwrap_or_default()),
        ));
    }
    Ok(env.data)
}

#[derive(Deserialize)]
struct MetaEntry {
    #[serde(rename = "type", default)]
    metric_type: String,
    #[serde(default)]
    help: String,
}

/// Metric name to (type, help) from a `/api/v1/metadata` body. When a metric
/// has several entries (one per target) the first is used.
pub fn parse_metadata(body: &str) -> Result<BTreeMap<String, (String, String)>, IngestError> {
    let data = unwrap_envelope(body, "metadata")?;
    if data.is_null() {
        return Ok(BTreeMap::new());
    }
    let map: BTreeMap<String, Vec<MetaEntry>> =
        serde_json::from_value(data).map_err(|e| IngestError::malformed(SOURCE, format!("metadata: {e}")))?;
    Ok(map
        .into_iter()
        .filter_map(|(name, entries)| {
            let first = entries.into_iter().next()?;
            let t = if first.metric_type.is_empty() {
                "unknown".to_string()
            } else {
                first.metric_type
            };
            Some((name, (t, first.help)))
        })
        .collect())
}

/// Label sets from a `/api/v1/series` body.
pub fn parse_series(body: &str) -> Result<Vec<BTreeMap<String, String>>, IngestError> {
    let data = unwrap_envelope(body, "series")?;
    if data.is_null() {
        return Ok(Vec::new());
    }
    serde_json::from_value(data).map_err(|e| IngestError::malformed(SOURCE, format!("series: {e}")))
}

/// One record per metric. Metrics seen only in series get type `unknown`;
/// label values are deduplicated across series; `__name__` and other
/// `__`-prefixed labels are dropped.
pub fn merge_prometheus(
    metadata: BTreeMap<String, (String, String)>,
    series: &[BTreeMap<String, String>],
) -> Result<BTreeMap<String, MetricMeta>, IngestError> {
    let mut out: BTreeMap<String, MetricMeta> = metadata
        .into_iter()
        .map(|(name, (metric_type, help))| {
            (
                name,
                MetricMeta {
                    metric_type,
                    help,
                    labels: BTreeMap::new(),
                },
            )
        })
        .collect();
    for s in series {
        let Some(name) = s.get("__name__") else {
            return Err(IngestError::malformed(SOURCE, "series entry without __name__"));
        };
        let m = out.entry(name.clone()).or_insert_with(|| MetricMeta {
            metric_type: "unknown".into(),
            ..Default::default()
        });
        for (label, value) in s {
            if label.starts_with("__") {
                continue;
            }
            m.labels.entry(label.clone()).or_default().insert(value.clone());
        }
    }
    Ok(out)
}

/// Reads recorded `/api/v1/metadata` and `/api/v1/series` bodies.
pub fn load_prometheus(metadata: &Path, series: Option<&Path>) -> Result<BTreeMap<String, MetricMeta>, IngestError> {
    let meta = parse_metadata(&read_file(metadata)?)?;
    let series = match series {
        Some(p) => parse_series(&read_file(p)?)?,
        None => Vec::new(),
    };
    merge_prometheus(meta, &series)
}

/// Queries a live Prometheus server.
pub fn fetch_prometheus(
    http: &reqwest::blocking::Client,
    base_url: &str,
    window: &TimeWindow,
    bearer: Option<&str>,
) -> Result<BTreeMap<String, MetricMeta>, IngestError> {
    let base = base_url.trim_end_matches('/');
    let meta = parse_metadata(&get_json(http, &format!("{base}/api/v1/metadata"), &[], bearer)?)?;
    let mut query = vec![("match[]", r#"{__name__=~".+"}"#.to_string())];
    if let Some(s) = &window.start {
        query.push(("start", s.clone()));
    }
    if let Some(e) = &window.end {
        query.push(("end", e.clone()));
    }
    let series = parse_series(&get_json(http, &format!("{base}/api/v1/series"), &query, bearer)?)?;
    merge_prometheus(meta, &series)
}
