//! Shared helpers for the golden-suite tests.
#![allow(dead_code)]

pub mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use promkg::eval::{run_eval, BenchmarkCase, EvalReport, FixedPredictions};
use promkg::golden::{self, ExpectedOutput, GoldenCase, MODES};
use promkg::ingest::{build_graph, fetch_all, LinkingConfig, SourceConfig};
use promkg::llm::{Client, ClientConfig, MockProvider, MockScript};
use promkg::pipeline::{AblationFlags, Answer, Engine};
use promkg::retrieve::RetrievalConfig;
use promkg::Graph;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn golden_dir() -> PathBuf {
    workspace_root().join("fixtures/golden")
}

pub fn trainticket_graph() -> Graph {
    let sources = SourceConfig::from_fixture_dir(workspace_root().join("fixtures/trainticket")).expect("fixture layout");
    let bundle = fetch_all(&sources).expect("fixture sources load");
    build_graph(&bundle, &LinkingConfig::default())
        .expect("fixture graph builds")
        .0
}

pub fn golden_cases() -> Vec<GoldenCase> {
    golden::load_cases(golden_dir().join("cases.json")).expect("golden cases load")
}

/// Engine answering from the committed mock script only.
pub fn replay_engine(graph: Graph) -> Engine {
    let script = MockScript::load(golden_dir().join("mock_script.jsonl")).expect("mock script loads");
    let client = Client::new(Arc::new(MockProvider::new(script)), ClientConfig::default());
    Engine::new(graph, client, RetrievalConfig::default())
}

/// Every case answered under every recorded mode, by mode name then id.
pub struct GoldenRun {
    pub cases: Vec<GoldenCase>,
    pub answers: BTreeMap<&'static str, BTreeMap<String, Answer>>,
}

impl GoldenRun {
    pub fn replay() -> Self {
        let engine = replay_engine(trainticket_graph());
        let cases = golden_cases();
        let mut answers = BTreeMap::new();
        for (mode, flags) in MODES {
            let by_id = cases
                .iter()
                .map(|c| {
                    let a = engine
                        .answer(&c.question, flags)
                        .unwrap_or_else(|e| panic!("{} ({mode}): {e}", c.id));
                    (c.id.clone(), a)
                })
                .collect();
            answers.insert(mode, by_id);
        }
        GoldenRun { cases, answers }
    }

    pub fn outputs(&self) -> Vec<ExpectedOutput> {
        MODES
            .iter()
            .flat_map(|(mode, _)| {
                self.cases.iter().map(move |c| ExpectedOutput {
                    id: c.id.clone(),
                    mode: mode.to_string(),
                    promql: self.answers[mode][&c.id].promql.clone(),
                })
            })
            .collect()
    }

    pub fn dataset(&self) -> Vec<BenchmarkCase> {
        self.cases.iter().map(GoldenCase::benchmark_case).collect()
    }

    pub fn report(&self, mode: &str, flags: AblationFlags) -> EvalReport {
        let preds = FixedPredictions(
            self.answers[mode]
                .iter()
                .map(|(id, a)| (id.clone(), a.promql.clone()))
                .collect(),
        );
        run_eval(&self.dataset(), &preds, flags).expect("eval runs")
    }

    /// (found, required) over all cases, for required metrics.
    pub fn metric_recall(&self) -> (usize, usize) {
        let mut found = 0;
        let mut total = 0;
        for c in &self.cases {
            let a = &self.answers["full"][&c.id];
            let got: BTreeSet<&str> = a.retrieved.metrics.iter().map(|m| m.name.as_str()).collect();
            total += c.required_metrics.len();
            found += c.required_metrics.iter().filter(|m| got.contains(m.as_str())).count();
        }
        (found, total)
    }

    /// (found, required) over all cases, for required triples.
    pub fn triple_recall(&self, g: &Graph) -> (usize, usize) {
        let mut found = 0;
        let mut total = 0;
        for c in &self.cases {
            let a = &self.answers["full"][&c.id];
            let got: BTreeSet<String> = a.retrieved.triples.iter().map(|t| t.render(g)).collect();
            total += c.required_triples.len();
            found += c.required_triples.iter().filter(|t| got.contains(*t)).count();
        }
        (found, total)
    }

    /// Largest estimated prompt of any model call, in any stage and mode.
    pub fn max_prompt_tokens(&self) -> usize {
        self.answers
            .values()
            .flat_map(|m| m.values())
            .flat_map(|a| {
                let calls = a.trace.iter().flat_map(|s| s.llm_calls.iter().map(|c| c.prompt_estimate));
                calls.chain([a.prompt_tokens])
            })
            .max()
            .unwrap_or(0)
    }
}
