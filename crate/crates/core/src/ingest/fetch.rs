//! Source configuration and concurrent collection.
//!
//! A fixture directory has this layout (every part optional):
//!
//! ```text
//! <dir>/prometheus/metadata.json   body of GET /api/v1/metadata
//! <dir>/prometheus/series.json     body of GET /api/v1/series
//! <dir>/kubernetes/*.json          list responses, read in file-name order
//! <dir>/traces/*.jsonl             span records
//! <dir>/docs/*.jsonl               description records
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{docs, kube, prometheus, traces, IngestError, LinkingConfig, SourceBundle, TimeWindow};

/// Where each source comes from. Live endpoints and files are mutually
/// exclusive per source; a source with neither is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub prometheus_url: Option<String>,
    pub prometheus_metadata: Option<PathBuf>,
    pub prometheus_series: Option<PathBuf>,
    pub window: TimeWindow,
    pub kubernetes_url: Option<String>,
    pub kubernetes_files: Vec<PathBuf>,
    pub trace_files: Vec<PathBuf>,
    pub doc_files: Vec<PathBuf>,
    /// Name of an environment variable whose value is sent as a bearer
    /// token to both live endpoints.
    pub bearer_token_env: Option<String>,
    pub timeout_secs: u64,
    pub linking: LinkingConfig,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            prometheus_url: None,
            prometheus_metadata: None,
            prometheus_series: None,
            window: TimeWindow::default(),
            kubernetes_url: None,
            kubernetes_files: Vec::new(),
            trace_files: Vec::new(),
            doc_files: Vec::new(),
            bearer_token_env: None,
            timeout_secs: 30,
            linking: LinkingConfig::default(),
        }
    }
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, IngestError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| IngestError::io(dir, e))? {
        let p = entry.map_err(|e| IngestError::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == ext) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

impl SourceConfig {
    /// Files from a fixture directory laid out as described above.
    pub fn from_fixture_dir(dir: impl AsRef<Path>) -> Result<Self, IngestError> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(IngestError::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "fixture directory not found"),
            ));
        }
        let prom = dir.join("prometheus");
        let existing = |p: PathBuf| p.is_file().then_some(p);
        Ok(SourceConfig {
            prometheus_metadata: existing(prom.join("metadata.json")),
            prometheus_series: existing(prom.join("series.json")),
            kubernetes_files: sorted_files(&dir.join("kubernetes"), "json")?,
            trace_files: sorted_files(&dir.join("traces"), "jsonl")?,
            doc_files: sorted_files(&dir.join("docs"), "jsonl")?,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let conflict = |what: &str| IngestError::malformed("config", format!("{what}: set either a URL or files, not both"));
        if self.prometheus_url.is_some() && (self.prometheus_metadata.is_some() || self.prometheus_series.is_some()) {
            return Err(conflict("prometheus"));
        }
        if self.prometheus_series.is_some() && self.prometheus_metadata.is_none() {
            return Err(IngestError::malformed(
                "config",
                "prometheus_series needs prometheus_metadata",
            ));
        }
        if self.kubernetes_url.is_some() && !self.kubernetes_files.is_empty() {
            return Err(conflict("kubernetes"));
        }
        self.linking.validate()
    }

    /// True when no source is configured at all.
    pub fn is_empty(&self) -> bool {
        self.prometheus_url.is_none()
            && self.prometheus_metadata.is_none()
            && self.kubernetes_url.is_none()
            && self.kubernetes_files.is_empty()
            && self.trace_files.is_empty()
            && self.doc_files.is_empty()
    }

    /// Resolves relative file paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.prometheus_metadata.iter_mut().for_each(fix);
        self.prometheus_series.iter_mut().for_each(fix);
        self.kubernetes_files.iter_mut().for_each(fix);
        self.trace_files.iter_mut().for_each(fix);
        self.doc_files.iter_mut().for_each(fix);
    }
}

/// A source that could not be collected.
#[derive(Debug)]
pub struct SourceFailure {
    pub source_name: &'static str,
    pub error: IngestError,
}

impl fmt::Display for SourceFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.source_name, self.error)
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))
}

const MAX_ATTEMPTS: u32 = 3;
const BACKOFF: Duration = Duration::from_millis(200);

/// GET returning the body, retrying throttling, server errors and
/// transport failures with doubling backoff.
pub(crate) fn get_json(
    http: &reqwest::blocking::Client,
    url: &str,
    query: &[(&str, String)],
    bearer: Option<&str>,
) -> Result<String, IngestError> {
    let mut delay = BACKOFF;
    let mut attempt = 1;
    loop {
        let result = (|| {
            let mut req = http.get(url).query(query).header("Accept", "application/json");
            if let Some(t) = bearer {
                req = req.bearer_auth(t);
            }
            let resp = req.send().map_err(|e| IngestError::Transport {
                endpoint: url.to_string(),
                message: e.to_string(),
            })?;
            let status = resp.status().as_u16();
            let body = resp.text().map_err(|e| IngestError::Transport {
                endpoint: url.to_string(),
                message: e.to_string(),
            })?;
            if !(200..300).contains(&status) {
                return Err(IngestError::Http {
                    endpoint: url.to_string(),
                    status,
                    body: body.chars().take(500).collect(),
                });
            }
            Ok(body)
        })();
        match result {
            Err(e) if e.is_retriable() && attempt < MAX_ATTEMPTS => {
                tracing::warn!(%url, attempt, error = %e, "retrying");
                std::thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// Collects all four sources, each on its own thread. Every failing
/// source is reported, not just the first.
pub fn fetch_all(config: &SourceConfig) -> Result<SourceBundle, IngestError> {
    config.validate()?;
    let bearer = config.bearer_token_env.as_deref().and_then(|var| std::env::var(var).ok());
    let bearer = bearer.as_deref();
    let http = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(config.timeout_secs))
        .build()
        .map_err(|e| IngestError::Transport {
            endpoint: "-".into(),
            message: e.to_string(),
        })?;
    let http = &http;

    let (prom, kube, spans, docs) = std::thread::scope(|s| {
        let prom = s.spawn(|| match (&config.prometheus_url, &config.prometheus_metadata) {
            (Some(url), _) => prometheus::fetch_prometheus(http, url, &config.window, bearer),
            (None, Some(meta)) => prometheus::load_prometheus(meta, config.prometheus_series.as_deref()),
            (None, None) => Ok(Default::default()),
        });
        let kube = s.spawn(|| match &config.kubernetes_url {
            Some(url) => kube::fetch_kubernetes(http, url, bearer),
            None => kube::load_kubernetes(&config.kubernetes_files),
        });
        let spans = s.spawn(|| traces::load_traces(&config.trace_files));
        let docs = s.spawn(|| docs::load_docs(&config.doc_files));
        (
            prom.join().expect("prometheus fetcher panicked"),
            kube.join().expect("kubernetes fetcher panicked"),
            spans.join().expect("trace loader panicked"),
            docs.join().expect("doc loader panicked"),
        )
    });

    let mut failures = Vec::new();
    let mut keep = |name: &'static str, r: Result<(), IngestError>| {
        if let Err(error) = r {
            failures.push(SourceFailure {
                source_name: name,
                error,
            });
        }
    };
    let mut bundle = SourceBundle::default();
    keep("prometheus", prom.map(|m| bundle.metrics = m));
    keep("kubernetes", kube.map(|k| bundle.kube_objects = k));
    keep("traces", spans.map(|t| bundle.spans = t));
    keep("docs", docs.map(|d| bundle.docs = d));
    if failures.is_empty() {
        Ok(bundle)
    } else {
        Err(IngestError::Sources(failures))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// Serves the given (status, body) responses in order, one per
    /// connection.
    fn serve(responses: Vec<(u16, &'static str)>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut sock, _) = listener.accept().unwrap();
                let mut buf = [0u8; 4096];
                let _ = sock.read(&mut buf);
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                sock.write_all(reply.as_bytes()).unwrap();
            }
        });
        format!("http://{addr}")
    }

    #[test]
    fn live_prometheus_with_retry() {
        let base = serve(vec![
            (503, "busy"),
            (
                200,
                r#"{"status":"success","data":{"up":[{"type":"gauge","help":"Target up.","unit":""}]}}"#,
            ),
            (
                200,
                r#"{"status":"success","data":[{"__name__":"up","instance":"pod1:8080"}]}"#,
            ),
        ]);
        let cfg = SourceConfig {
            prometheus_url: Some(base),
            ..Default::default()
        };
        let b = fetch_all(&cfg).unwrap();
        assert_eq!(b.metrics["up"].metric_type, "gauge");
        assert!(b.metrics["up"].labels["instance"].contains("pod1:8080"));
    }

    #[test]
    fn http_failure_names_endpoint_and_status() {
        let base = serve(vec![(404, "nope")]);
        let http = reqwest::blocking::Client::new();
        let err = get_json(&http, &format!("{base}/api/v1/metadata"), &[], None).unwrap_err();
        match err {
            IngestError::Http { endpoint, status, .. } => {
                assert!(endpoint.ends_with("/api/v1/metadata"));
                assert_eq!(status, 404);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn failures_are_collected_per_source() {
        let cfg = SourceConfig {
            trace_files: vec!["/nonexistent/a.jsonl".into()],
            doc_files: vec!["/nonexistent/b.jsonl".into()],
            ..Default::default()
        };
        match fetch_all(&cfg) {
            Err(IngestError::Sources(f)) => {
                let names: Vec<_> = f.iter().map(|x| x.source_name).collect();
                assert_eq!(names, ["traces", "docs"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_config_gives_empty_bundle() {
        let cfg = SourceConfig::default();
        assert!(cfg.is_empty());
        assert_eq!(fetch_all(&cfg).unwrap(), SourceBundle::default());
    }

    #[test]
    fn conflicting_sources_rejected() {
        let cfg = SourceConfig {
            kubernetes_url: Some("http://x".into()),
            kubernetes_files: vec!["a.json".into()],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
