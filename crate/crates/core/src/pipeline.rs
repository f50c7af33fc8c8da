//! Question in, PromQL out.
//!
//! Stages, each recorded in [`Answer::trace`]:
//!
//! | stage                 | skipped when                       |
//! |-----------------------|------------------------------------|
//! | `extract_paths`       | component knowledge is ablated     |
//! | `extract_pairs`       | metric knowledge is ablated        |
//! | `component_retrieval` | component knowledge is ablated     |
//! | `metric_retrieval`    | metric knowledge is ablated        |
//! | `label_retrieval`     | metric knowledge is ablated        |
//! | `generate`            | never                              |
//! | `validate`            | never                              |

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::graph::{EntityId, Graph};
use crate::llm::{count_tokens, CallRecord, Client, LlmError, Session, Usage, DEFAULT_CONTEXT_LIMIT};
use crate::parse::{self, MetricComponentPair};
use crate::prompts::{GENERATE_EXAMPLES, GENERATE_INSTRUCTION};
use crate::retrieve::{
    self, bfs_reasoning_paths, preprocess_paths, retrieve_component_labels, retrieve_semantic_labels, KnowledgeIndex, MetricInfo,
    RetrievalConfig, RetrievedKnowledge,
};

pub const STAGE_GENERATE: &str = "generate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationFlags {
    pub include_metric_knowledge: bool,
    pub include_component_knowledge: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        AblationFlags {
            include_metric_knowledge: true,
            include_component_knowledge: true,
        }
    }
}

impl AblationFlags {
    pub const FULL: AblationFlags = AblationFlags {
        include_metric_knowledge: true,
        include_component_knowledge: true,
    };
    /// Without system-component knowledge.
    pub const NO_SK: AblationFlags = AblationFlags {
        include_metric_knowledge: true,
        include_component_knowledge: false,
    };
    /// Without metric knowledge.
    pub const NO_MK: AblationFlags = AblationFlags {
        include_metric_knowledge: false,
        include_component_knowledge: true,
    };
    pub const NONE: AblationFlags = AblationFlags {
        include_metric_knowledge: false,
        include_component_knowledge: false,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub duration_ms: u64,
    pub usage: Usage,
    pub llm_calls: Vec<CallRecord>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub question: String,
    pub promql: String,
    pub ast_valid: bool,
    pub used_metrics: BTreeSet<String>,
    pub retrieved: RetrievedKnowledge,
    pub prompt_tokens: usize,
    /// Parser diagnostics for `promql`, rendered with line/column.
    pub query_diagnostics: Vec<String>,
    pub trace: Vec<StageRecord>,
}

impl Answer {
    pub fn usage(&self) -> Usage {
        let mut u = Usage::default();
        for s in &self.trace {
            u += s.usage;
        }
        u
    }

    pub fn llm_calls(&self) -> impl Iterator<Item = &CallRecord> {
        self.trace.iter().flat_map(|s| s.llm_calls.iter())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("generation prompt is ~{estimated} tokens, over the {limit}-token limit")]
    ContextLength { estimated: usize, limit: usize },
    // The cause is part of the message rather than a `source()`, so
    // chain-printing reporters do not repeat it.
    #[error("model call failed in stage {stage}: {error}")]
    Llm { stage: String, error: LlmError },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembledPrompt {
    pub text: String,
    pub estimated_tokens: usize,
}

/// Generation prompt: related metrics, domain knowledge triples, worked
/// examples, instructions, then the question. Empty knowledge sections are
/// left out entirely.
pub fn assemble_prompt(
    question: &str,
    knowledge: &RetrievedKnowledge,
    g: &Graph,
    context_limit: usize,
) -> Result<AssembledPrompt, PipelineError> {
    let mut text = String::new();
    if !knowledge.metrics.is_empty() {
        text.push_str("Related Metrics\n");
        for m in &knowledge.metrics {
            let desc = if m.description.is_empty() {
                "(no description)"
            } else {
                m.description.as_str()
            };
            text.push_str(&format!("- {} ({}): {}\n", m.name, m.metric_type, desc));
        }
        text.push('\n');
    }
    if !knowledge.triples.is_empty() {
        text.push_str("Domain Knowledge\n");
        for t in &knowledge.triples {
            text.push_str(&t.render(g));
            text.push('\n');
        }
        text.push('\n');
    }
    text.push_str(GENERATE_EXAMPLES.trim_end());
    text.push_str("\n\n");
    text.push_str(GENERATE_INSTRUCTION.trim_end());
    text.push_str("\n\n");
    text.push_str(&format!("Question: {}\nReasoning:\n", question.trim()));
    let estimated_tokens = count_tokens(&text);
    if estimated_tokens > context_limit {
        return Err(PipelineError::ContextLength {
            estimated: estimated_tokens,
            limit: context_limit,
        });
    }
    Ok(AssembledPrompt { text, estimated_tokens })
}

/// Picks the query out of a model reply: the first fenced code block, else
/// the last line that parses as PromQL, else the whole reply.
pub fn extract_query(reply: &str) -> String {
    if let Some(start) = reply.find("```") {
        let after = &reply[start + 3..];
        // drop an info string such as `promql`
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let body = &after[body_start..];
        if let Some(end) = body.find("```") {
            let q = body[..end].trim();
            if !q.is_empty() {
                return q.to_string();
            }
        }
    }
    if let Some(line) = reply
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| !l.is_empty() && promql::parse_query(l).is_ok())
    {
        return line.to_string();
    }
    reply.trim().to_string()
}

/// Shared, immutable inputs for answering questions.
#[derive(Debug, Clone)]
pub struct Engine {
    pub graph: std::sync::Arc<Graph>,
    pub index: std::sync::Arc<KnowledgeIndex>,
    pub client: Client,
    pub retrieval: RetrievalConfig,
    pub context_limit: usize,
}

impl Engine {
    pub fn new(graph: Graph, client: Client, retrieval: RetrievalConfig) -> Self {
        let index = KnowledgeIndex::build(&graph);
        let context_limit = client.config().context_limit;
        Engine {
            graph: std::sync::Arc::new(graph),
            index: std::sync::Arc::new(index),
            client,
            retrieval,
            context_limit: if context_limit == 0 {
                DEFAULT_CONTEXT_LIMIT
            } else {
                context_limit
            },
        }
    }

    pub fn answer(&self, question: &str, flags: AblationFlags) -> Result<Answer, PipelineError> {
        answer_question(
            question,
            &self.graph,
            &self.index,
            &self.retrieval,
            &self.client,
            flags,
            self.context_limit,
        )
    }
}

struct Tracer {
    session: Session,
    trace: Vec<StageRecord>,
    started: Instant,
}

impl Tracer {
    fn begin(&mut self) {
        self.started = Instant::now();
    }

    fn end(&mut self, stage: &str, diagnostics: Vec<String>) {
        let calls = self.session.drain_calls();
        let mut usage = Usage::default();
        for c in &calls {
            usage += c.usage;
        }
        self.trace.push(StageRecord {
            stage: stage.to_string(),
            duration_ms: self.started.elapsed().as_millis() as u64,
            usage,
            llm_calls: calls,
            diagnostics,
        });
    }

    fn fail(&mut self, stage: &str, e: LlmError) -> PipelineError {
        self.end(stage, vec![e.to_string()]);
        PipelineError::Llm {
            stage: stage.to_string(),
            error: e,
        }
    }
}

pub fn answer_question(
    question: &str,
    g: &Graph,
    index: &KnowledgeIndex,
    config: &RetrievalConfig,
    client: &Client,
    flags: AblationFlags,
    context_limit: usize,
) -> Result<Answer, PipelineError> {
    let question = question.trim();
    if question.is_empty() {
        return Err(PipelineError::EmptyQuestion);
    }
    let mut t = Tracer {
        session: Session::new(client.clone()),
        trace: Vec::new(),
        started: Instant::now(),
    };

    // 1. question parsing
    let mut paths = Vec::new();
    if flags.include_component_knowledge {
        t.begin();
        match parse::extract_paths(question, &mut t.session) {
            Ok((p, mut notes)) => {
                if p.is_empty() {
                    notes.push("no relation paths; continuing with metric knowledge only".into());
                }
                paths = p;
                t.end(parse::STAGE_PATHS, notes);
            }
            Err(e) => return Err(t.fail(parse::STAGE_PATHS, e)),
        }
    }
    let mut pairs: Vec<MetricComponentPair> = Vec::new();
    if flags.include_metric_knowledge {
        t.begin();
        match parse::extract_pairs(question, &mut t.session) {
            Ok(p) => {
                pairs = p;
                t.end(parse::STAGE_PAIRS, Vec::new());
            }
            Err(e) => return Err(t.fail(parse::STAGE_PAIRS, e)),
        }
    }

    // 2. system component knowledge
    let mut reasoning = Vec::new();
    if flags.include_component_knowledge {
        t.begin();
        let (resolved, mut notes) = preprocess_paths(&paths, g, index);
        for r in &resolved {
            match bfs_reasoning_paths(g, r) {
                Ok(out) => {
                    if out.truncated {
                        notes.push(format!(
                            "reasoning paths from {} truncated at {}",
                            r.start,
                            retrieve::BFS_PATH_CAP
                        ));
                    }
                    for p in out.paths {
                        if !reasoning.contains(&p) {
                            reasoning.push(p);
                        }
                    }
                }
                Err(e) => notes.push(e.to_string()),
            }
        }
        notes.push(format!("{} reasoning paths", reasoning.len()));
        t.end("component_retrieval", notes);
    }

    // 3. metric knowledge
    let mut metrics: Vec<EntityId> = Vec::new();
    if flags.include_metric_knowledge {
        t.begin();
        match retrieve::retrieve_metrics(question, &pairs, g, index, config, &mut t.session) {
            Ok(r) => {
                metrics = r.selected;
                t.end("metric_retrieval", r.diagnostics);
            }
            Err(e) => return Err(t.fail("metric_retrieval", e)),
        }

        t.begin();
        let mut label_paths = retrieve_component_labels(&metrics, &reasoning, g);
        match retrieve_semantic_labels(&metrics, question, g, config, &mut t.session) {
            Ok((sem, notes)) => {
                label_paths.extend(sem);
                reasoning.extend(label_paths);
                t.end("label_retrieval", notes);
            }
            Err(e) => return Err(t.fail("label_retrieval", e)),
        }
    }

    let infos: Vec<MetricInfo> = metrics.iter().filter_map(|m| MetricInfo::from_graph(g, m)).collect();
    let knowledge = RetrievedKnowledge::new(infos, reasoning);

    // 4. generation
    t.begin();
    let prompt = match assemble_prompt(question, &knowledge, g, context_limit) {
        Ok(p) => p,
        Err(e) => {
            t.end(STAGE_GENERATE, vec![e.to_string()]);
            return Err(e);
        }
    };
    let reply = match t.session.ask(STAGE_GENERATE, prompt.text.clone()) {
        Ok(r) => r,
        Err(e) => return Err(t.fail(STAGE_GENERATE, e)),
    };
    t.end(STAGE_GENERATE, vec![format!("prompt ~{} tokens", prompt.estimated_tokens)]);

    t.begin();
    let promql_text = extract_query(&reply);
    let (ast_valid, used_metrics, query_diagnostics): (bool, BTreeSet<String>, Vec<String>) =
        match promql::parse_query(&promql_text) {
            Ok(parsed) => (
                true,
                promql::metric_names(&parsed.expr),
                parsed.diagnostics.iter().map(|d| d.render(&promql_text)).collect(),
            ),
            Err(err) => (
                false,
                BTreeSet::new(),
                err.diagnostics.iter().map(|d| d.render(&promql_text)).collect(),
            ),
        };
    t.end("validate", query_diagnostics.clone());

    Ok(Answer {
        question: question.to_string(),
        promql: promql_text,
        ast_valid,
        used_metrics,
        retrieved: knowledge,
        prompt_tokens: prompt.estimated_tokens,
        query_diagnostics,
        trace: t.trace,
    })
}
