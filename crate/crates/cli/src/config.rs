//! Configuration: a TOML file, overridden by environment variables,
//! overridden by command-line flags.
//!
//! ```toml
//! graph = "graph.jsonl"                  # snapshot written by build, read by the rest
//! fixture_dir = "fixtures/trainticket"   # shorthand for file sources in the standard layout
//!
//! [sources]                              # explicit sources (see promkg::ingest::SourceConfig)
//! prometheus_url = "http://prometheus:9090"
//!
//! [retrieval]
//! top_k_metrics = 10
//! top_m_label_values = 1
//!
//! [llm]
//! provider = "http"                      # or "mock"
//! mock_script = "fixtures/golden/mock_script.jsonl"
//! [llm.client]
//! model = "gpt-4o"
//! max_in_flight = 4
//! [llm.http]
//! base_url = "https://api.openai.com/v1"
//!
//! [ablation]
//! include_metric_knowledge = true
//! include_component_knowledge = true
//! ```
//!
//! Relative paths in the file are resolved against the file's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use promkg::ingest::SourceConfig;
use promkg::llm::{ChatProvider, Client, ClientConfig, HttpConfig, HttpProvider, MockProvider, MockScript};
use promkg::pipeline::AblationFlags;
use promkg::retrieve::RetrievalConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Http,
    Mock,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub provider: ProviderKind,
    pub mock_script: Option<PathBuf>,
    pub client: ClientConfig,
    pub http: HttpConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub graph: Option<PathBuf>,
    pub fixture_dir: Option<PathBuf>,
    pub sources: SourceConfig,
    pub retrieval: RetrievalConfig,
    pub llm: LlmSettings,
    pub ablation: AblationFlags,
}

/// Values that may come from flags or the environment; `None` leaves the
/// file's value alone.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Configuration file (TOML).
    #[arg(long, global = true, env = "PROMKG_CONFIG")]
    pub config: Option<PathBuf>,
    /// Graph snapshot path.
    #[arg(long, global = true, env = "PROMKG_GRAPH")]
    pub graph: Option<PathBuf>,
    /// Model provider.
    #[arg(long, global = true, env = "PROMKG_LLM_PROVIDER", value_enum)]
    pub provider: Option<ProviderKind>,
    /// Mock script for the mock provider.
    #[arg(long, global = true, env = "PROMKG_MOCK_SCRIPT")]
    pub mock_script: Option<PathBuf>,
    /// Model name sent to the provider.
    #[arg(long, global = true, env = "PROMKG_LLM_MODEL")]
    pub model: Option<String>,
    /// Base URL of an OpenAI-compatible API.
    #[arg(long, global = true, env = "PROMKG_LLM_BASE_URL")]
    pub base_url: Option<String>,
}

fn rebase(p: &mut Option<PathBuf>, base: &Path) {
    if let Some(x) = p {
        if x.is_relative() {
            *x = base.join(&*x);
        }
    }
}

impl Config {
    pub fn from_toml(text: &str, base: &Path) -> anyhow::Result<Self> {
        let mut c: Config = toml::from_str(text)?;
        rebase(&mut c.graph, base);
        rebase(&mut c.fixture_dir, base);
        rebase(&mut c.llm.mock_script, base);
        c.sources.rebase(base);
        Ok(c)
    }

    /// Reads the file (if any) and applies overrides. Flag values win over
    /// environment values because clap resolves them that way before they
    /// get here.
    pub fn load(o: &Overrides) -> anyhow::Result<Self> {
        let mut c = match &o.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let base = path.parent().unwrap_or(Path::new("."));
                Config::from_toml(&text, base).with_context(|| format!("in {}", path.display()))?
            }
            None => Config::default(),
        };
        if let Some(g) = &o.graph {
            c.graph = Some(g.clone());
        }
        if let Some(p) = o.provider {
            c.llm.provider = p;
        }
        if let Some(s) = &o.mock_script {
            c.llm.mock_script = Some(s.clone());
        }
        if let Some(m) = &o.model {
            c.llm.client.model = m.clone();
        }
        if let Some(u) = &o.base_url {
            c.llm.http.base_url = u.clone();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.retrieval.validate().map_err(anyhow::Error::msg)?;
        if self.llm.client.max_in_flight == 0 {
            bail!("llm.client.max_in_flight must be at least 1");
        }
        if self.llm.provider == ProviderKind::Mock && self.llm.mock_script.is_none() {
            bail!("the mock provider needs llm.mock_script (or --mock-script)");
        }
        Ok(())
    }

    pub fn graph_path(&self) -> PathBuf {
        self.graph.clone().unwrap_or_else(|| PathBuf::from("graph.jsonl"))
    }

    pub fn client(&self) -> anyhow::Result<Client> {
        let provider: Arc<dyn ChatProvider> = match self.llm.provider {
            ProviderKind::Mock => {
                let path = self.llm.mock_script.as_ref().expect("validated");
                let script = MockScript::load(path).with_context(|| format!("loading {}", path.display()))?;
                Arc::new(MockProvider::new(script))
            }
            ProviderKind::Http => Arc::new(HttpProvider::from_env(self.llm.http.clone())?),
        };
        Ok(Client::new(provider, self.llm.client.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_toml("graph = 'g'\nbogus = 1\n", Path::new(".")).is_err());
        assert!(Config::from_toml("[llm.client]\nmodle = 'x'\n", Path::new(".")).is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let c = Config::from_toml(
            "graph = 'g.jsonl'\n[llm]\nprovider = 'mock'\nmock_script = '/abs/s.jsonl'\n[sources]\ntrace_files = ['t.jsonl']\n",
            Path::new("/etc/promkg"),
        )
        .unwrap();
        assert_eq!(c.graph.unwrap(), Path::new("/etc/promkg/g.jsonl"));
        assert_eq!(c.llm.mock_script.unwrap(), Path::new("/abs/s.jsonl"));
        assert_eq!(c.sources.trace_files[0], Path::new("/etc/promkg/t.jsonl"));
    }

    #[test]
    fn overrides_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "graph = 'from-file.jsonl'\n[llm.client]\nmodel = 'file-model'\n").unwrap();
        let o = Overrides {
            config: Some(path),
            graph: Some("flag.jsonl".into()),
            ..Default::default()
        };
        let c = Config::load(&o).unwrap();
        assert_eq!(c.graph.unwrap(), Path::new("flag.jsonl"));
        assert_eq!(c.llm.client.model, "file-model");
    }
}
