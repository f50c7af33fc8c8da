//! The golden suite: questions over the TrainTicket-like fixture, with a
//! hand-written reply for every model call the pipeline makes.
//!
//! Cases live in one JSON file (`fixtures/golden/cases.json`). A
//! [`StagedResponder`] answers each request by looking at its stage and at
//! the question (and, for label selection, the metric) quoted in the
//! prompt. [`record`] runs every case under each recorded ablation mode
//! with that responder and freezes the exchanges into a fingerprint-keyed
//! [`MockScript`]; replaying the script with [`crate::llm::MockProvider`]
//! then needs nothing but the prompts to match byte for byte.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eval::BenchmarkCase;
use crate::graph::Graph;
use crate::llm::{ChatRequest, Client, ClientConfig, FnProvider, LlmError, MockScript, RecordingProvider};
use crate::parse::{STAGE_PAIRS, STAGE_PATHS};
use crate::pipeline::{AblationFlags, Engine, PipelineError, STAGE_GENERATE};
use crate::retrieve::{RetrievalConfig, STAGE_LABELS, STAGE_SELECT};

/// Tag of cases whose answer depends on system-component knowledge.
pub const COMPONENT_TAG: &str = "component";

/// Ablation modes the script covers, by name.
pub const MODES: [(&str, AblationFlags); 3] = [
    ("full", AblationFlags::FULL),
    ("no_sk", AblationFlags::NO_SK),
    ("no_mk", AblationFlags::NO_MK),
];

pub fn mode_name(flags: AblationFlags) -> Option<&'static str> {
    MODES.iter().find(|(_, f)| *f == flags).map(|(n, _)| *n)
}

/// Replies for every stage of one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageReplies {
    pub extract_paths: String,
    pub extract_pairs: String,
    pub select_metrics: String,
    /// Per metric name; metrics not listed get "none".
    #[serde(default)]
    pub semantic_labels: BTreeMap<String, String>,
    pub generate: String,
    /// Generation reply when component knowledge is withheld; defaults to
    /// `generate`.
    #[serde(default)]
    pub generate_no_sk: Option<String>,
    /// Generation reply when metric knowledge is withheld; defaults to
    /// `generate`.
    #[serde(default)]
    pub generate_no_mk: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenCase {
    pub id: String,
    pub question: String,
    pub gold: Vec<String>,
    #[serde(default)]
    pub tags: Vec<String>,
    /// Metrics retrieval must surface.
    pub required_metrics: Vec<String>,
    /// Rendered triples retrieval must surface.
    #[serde(default)]
    pub required_triples: Vec<String>,
    pub replies: StageReplies,
}

impl GoldenCase {
    pub fn is_component_dependent(&self) -> bool {
        self.tags.iter().any(|t| t == COMPONENT_TAG)
    }

    pub fn benchmark_case(&self) -> BenchmarkCase {
        BenchmarkCase {
            id: self.id.clone(),
            question: self.question.clone(),
            gold: self.gold.clone(),
            tags: self.tags.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GoldenError {
    #[error("{path}: {message}")]
    Load { path: String, message: String },
    #[error("case {id}: {message}")]
    Case { id: String, message: String },
    #[error("case {id} ({mode}): {source}")]
    Pipeline {
        id: String,
        mode: String,
        #[source]
        source: PipelineError,
    },
    #[error("prompt {fingerprint} ({stage}) got different replies in different runs")]
    Conflict { fingerprint: String, stage: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub fn load_cases(path: impl AsRef<Path>) -> Result<Vec<GoldenCase>, GoldenError> {
    let path = path.as_ref();
    let err = |message: String| GoldenError::Load {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let cases: Vec<GoldenCase> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    let mut seen = std::collections::BTreeSet::new();
    for c in &cases {
        if !seen.insert(c.id.as_str()) {
            return Err(err(format!("duplicate id {}", c.id)));
        }
        c.benchmark_case().validate().map_err(|e| GoldenError::Case {
            id: c.id.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(cases)
}

/// Text after the last line starting with `marker`.
fn last_field<'a>(prompt: &'a str, marker: &str) -> Option<&'a str> {
    prompt.lines().rev().find_map(|l| l.strip_prefix(marker)).map(str::trim)
}

/// Text after the first line starting with `marker`.
fn first_field<'a>(prompt: &'a str, marker: &str) -> Option<&'a str> {
    prompt.lines().find_map(|l| l.strip_prefix(marker)).map(str::trim)
}

/// Answers pipeline requests from the authored replies.
#[derive(Debug, Clone)]
pub struct StagedResponder {
    by_question: BTreeMap<String, GoldenCase>,
    flags: AblationFlags,
}

impl StagedResponder {
    pub fn new(cases: &[GoldenCase], flags: AblationFlags) -> Self {
        StagedResponder {
            by_question: cases.iter().map(|c| (c.question.trim().to_string(), c.clone())).collect(),
            flags,
        }
    }

    pub fn respond(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let prompt = req.messages.last().map(|m| m.content.as_str()).unwrap_or_default();
        let unknown = |why: &str| LlmError::InvalidRequest(format!("{} request: {why}", req.stage));
        let question = last_field(prompt, "Question: ").ok_or_else(|| unknown("no question in prompt"))?;
        let case = self
            .by_question
            .get(question)
            .ok_or_else(|| unknown(&format!("no golden case for {question:?}")))?;
        let r = &case.replies;
        let reply = match req.stage.as_str() {
            STAGE_PATHS => r.extract_paths.clone(),
            STAGE_PAIRS => r.extract_pairs.clone(),
            STAGE_SELECT => r.select_metrics.clone(),
            STAGE_LABELS => {
                let metric = first_field(prompt, "Metric: ").ok_or_else(|| unknown("no metric in prompt"))?;
                r.semantic_labels.get(metric).cloned().unwrap_or_else(|| "none".to_string())
            }
            STAGE_GENERATE => {
                let variant = if !self.flags.include_component_knowledge {
                    r.generate_no_sk.as_ref()
                } else if !self.flags.include_metric_knowledge {
                    r.generate_no_mk.as_ref()
                } else {
                    None
                };
                variant.unwrap_or(&r.generate).clone()
            }
            other => return Err(unknown(&format!("unexpected stage {other}"))),
        };
        Ok(reply)
    }
}

/// Query produced for one case under one mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedOutput {
    pub id: String,
    pub mode: String,
    pub promql: String,
}

#[derive(Debug, Clone)]
pub struct Recording {
    pub script: MockScript,
    pub outputs: Vec<ExpectedOutput>,
}

impl Recording {
    /// `expected.jsonl` contents: one output per line, by mode then id.
    pub fn outputs_jsonl(&self) -> String {
        self.outputs
            .iter()
            .map(|o| serde_json::to_string(o).expect("output serializes") + "\n")
            .collect()
    }

    pub fn script_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.script.write(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("script is utf-8")
    }

    pub fn dataset_jsonl(cases: &[GoldenCase]) -> String {
        let mut buf = Vec::new();
        let ds: Vec<BenchmarkCase> = cases.iter().map(GoldenCase::benchmark_case).collect();
        crate::eval::write_dataset(&ds, &mut buf).expect("write to memory");
        String::from_utf8(buf).expect("dataset is utf-8")
    }

    /// Writes `mock_script.jsonl`, `expected.jsonl` and `dataset.jsonl`.
    pub fn save(&self, cases: &[GoldenCase], dir: &Path) -> Result<(), GoldenError> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in [
            ("mock_script.jsonl", self.script_jsonl()),
            ("expected.jsonl", self.outputs_jsonl()),
            ("dataset.jsonl", Self::dataset_jsonl(cases)),
        ] {
            std::fs::File::create(dir.join(name))?.write_all(text.as_bytes())?;
        }
        Ok(())
    }
}

/// Runs every case under every mode in [`MODES`] against the staged
/// responder and freezes the exchanges.
pub fn record(
    graph: &Graph,
    cases: &[GoldenCase],
    retrieval: &RetrievalConfig,
    client_config: &ClientConfig,
) -> Result<Recording, GoldenError> {
    let mut script = MockScript::default();
    let mut outputs = Vec::new();
    for (mode, flags) in MODES {
        let responder = StagedResponder::new(cases, flags);
        let provider = Arc::new(RecordingProvider::new(FnProvider::new("golden", move |req: &ChatRequest| {
            responder.respond(req)
        })));
        let client = Client::new(provider.clone(), client_config.clone());
        let engine = Engine::new(graph.clone(), client, retrieval.clone());
        for case in cases {
            let answer = engine.answer(&case.question, flags).map_err(|source| GoldenError::Pipeline {
                id: case.id.clone(),
                mode: mode.to_string(),
                source,
            })?;
            outputs.push(ExpectedOutput {
                id: case.id.clone(),
                mode: mode.to_string(),
                promql: answer.promql,
            });
        }
        for entry in provider.script().entries() {
            match script.get(&entry.fingerprint) {
                Some(existing) if existing.response != entry.response => {
                    return Err(GoldenError::Conflict {
                        fingerprint: entry.fingerprint.clone(),
                        stage: entry.stage.clone(),
                    })
                }
                Some(_) => {}
                None => script.insert_entry(entry.clone()),
            }
        }
    }
    Ok(Recording { script, outputs })
}

pub fn read_expected(path: impl AsRef<Path>) -> Result<Vec<ExpectedOutput>, GoldenError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| GoldenError::Load {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case() -> GoldenCase {
        GoldenCase {
            id: "c1".into(),
            question: "How busy is it?".into(),
            gold: vec!["up".into()],
            tags: vec![],
            required_metrics: vec!["up".into()],
            required_triples: vec![],
            replies: StageReplies {
                extract_paths: "none".into(),
                extract_pairs: "metric: up | component: ALL".into(),
                select_metrics: "selected: up".into(),
                semantic_labels: BTreeMap::from([("up".to_string(), "label: job | values: node".to_string())]),
                generate: "```\nup\n```".into(),
                generate_no_sk: Some("```\nup == 1\n```".into()),
                generate_no_mk: None,
            },
        }
    }

    #[test]
    fn responder_dispatches_on_stage_question_and_metric() {
        let r = StagedResponder::new(&[case()], AblationFlags::FULL);
        let ask = |stage: &str, prompt: &str| r.respond(&ChatRequest::user(stage, prompt));
        let q = "Question: example\n...\nQuestion: How busy is it?\nReasoning:\n";
        assert_eq!(ask(STAGE_PAIRS, q).unwrap(), "metric: up | component: ALL");
        let labels = "Metric: up\nType: gauge\n...\nMetric: other with labels\nQuestion: How busy is it?\nAnswer:";
        assert_eq!(ask(STAGE_LABELS, labels).unwrap(), "label: job | values: node");
        assert_eq!(ask(STAGE_LABELS, &labels.replace("Metric: up", "Metric: x")).unwrap(), "none");
        assert!(ask(STAGE_PATHS, "Question: unknown\n").is_err());

        let no_sk = StagedResponder::new(&[case()], AblationFlags::NO_SK);
        assert_eq!(
            no_sk.respond(&ChatRequest::user(STAGE_GENERATE, q)).unwrap(),
            "```\nup == 1\n```"
        );
        let no_mk = StagedResponder::new(&[case()], AblationFlags::NO_MK);
        assert_eq!(no_mk.respond(&ChatRequest::user(STAGE_GENERATE, q)).unwrap(), "```\nup\n```");
    }
}
