//! Benchmark scoring.
//!
//! Per case three booleans are computed from the predicted query text:
//!
//! - `syntax_ok`: the query parses and calls no function outside the
//!   standard catalogue;
//! - `metrics_ok`: its metric-name set equals that of at least one gold;
//! - `query_ok`: its canonical form equals that of at least one gold, and
//!   the two checks above hold.
//!
//! Because `query_ok` implies the other two, QueryAcc can never exceed
//! MetricAcc or SyntaxAcc. Aggregates are exact counts.
//!
//! Dataset files are JSONL with a header line:
//!
//! ```text
//! {"format":"promkg-dataset","version":1}
//! {"id":"q01","question":"...","gold":["..."],"tags":["component"]}
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::llm::Usage;
use crate::pipeline::{AblationFlags, Engine};

pub const DATASET_FORMAT: &str = "promkg-dataset";
pub const DATASET_VERSION: u32 = 1;
pub const REPORT_FORMAT: &str = "promkg-eval-report";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkCase {
    pub id: String,
    pub question: String,
    pub gold: Vec<String>,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },
    #[error("case {id}: {message}")]
    InvalidCase { id: String, message: String },
    #[error("report: {0}")]
    Report(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl BenchmarkCase {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |message: String| EvalError::InvalidCase {
            id: self.id.clone(),
            message,
        };
        if self.gold.is_empty() {
            return Err(bad("no gold queries".into()));
        }
        for g in &self.gold {
            if let Err(e) = promql::parse_query(g) {
                return Err(bad(format!("gold query {g:?} does not parse: {}", e.render(g))));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    format: String,
    version: u32,
}

pub fn read_dataset<R: BufRead>(r: R) -> Result<Vec<BenchmarkCase>, EvalError> {
    let mut lines = r.lines().enumerate();
    let bad = |line: usize, message: String| EvalError::Dataset { line, message };
    let Some((_, first)) = lines.next() else {
        return Err(bad(1, "missing header".into()));
    };
    let header: DatasetHeader = serde_json::from_str(&first?).map_err(|e| bad(1, format!("bad header: {e}")))?;
    if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
        return Err(bad(1, format!("unsupported dataset {} v{}", header.format, header.version)));
    }
    let mut out: Vec<BenchmarkCase> = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let case: BenchmarkCase = serde_json::from_str(&line).map_err(|e| bad(i + 1, e.to_string()))?;
        case.validate()?;
        if out.iter().any(|c| c.id == case.id) {
            return Err(bad(i + 1, format!("duplicate case id {}", case.id)));
        }
        out.push(case);
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<BenchmarkCase>, EvalError> {
    let f = std::fs::File::open(path)?;
    read_dataset(std::io::BufReader::new(f))
}

pub fn write_dataset<W: Write>(cases: &[BenchmarkCase], mut w: W) -> Result<(), EvalError> {
    let header = DatasetHeader {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
    };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header"))?;
    for c in cases {
        writeln!(w, "{}", serde_json::to_string(c).expect("case"))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseScore {
    pub syntax_ok: bool,
    pub metrics_ok: bool,
    pub query_ok: bool,
}

pub fn score_case(case: &BenchmarkCase, predicted: &str) -> CaseScore {
    let Ok(parsed) = promql::parse_query(predicted) else {
        return CaseScore {
            syntax_ok: false,
            metrics_ok: false,
            query_ok: false,
        };
    };
    let syntax_ok = !parsed.has_nonstandard_function();
    let names = promql::metric_names(&parsed.expr);
    let metrics_ok = case.gold.iter().any(|g| {
        promql::parse_query(g)
            .map(|gp| promql::metric_names(&gp.expr) == names)
            .unwrap_or(false)
    });
    let query_ok = syntax_ok && metrics_ok && promql::queries_equivalent(predicted, &case.gold);
    CaseScore {
        syntax_ok,
        metrics_ok,
        query_ok,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub question: String,
    pub predicted: Option<String>,
    pub syntax_ok: bool,
    pub metrics_ok: bool,
    pub query_ok: bool,
    pub usage: Usage,
    #[serde(default)]
    pub tags: Vec<String>,
    /// Harness-level failure (transport error, etc.); the case scores false.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `correct / total`, kept as counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: u64,
    pub total: u64,
}

impl Accuracy {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.correct, self.total.max(1))
    }

    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.total as f64
        }
    }
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ({:.1}%)", self.correct, self.total, self.percent())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub flags: AblationFlags,
    pub cases: Vec<CaseRecord>,
    pub metric_acc: Accuracy,
    pub syntax_acc: Accuracy,
    pub query_acc: Accuracy,
    pub errored: usize,
    /// Wall-clock stamp; kept apart so the rest of the report is
    /// reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

impl EvalReport {
    pub fn from_cases(mut cases: Vec<CaseRecord>, flags: AblationFlags) -> Result<Self, EvalError> {
        if cases.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let total = cases.len() as u64;
        let count = |f: fn(&CaseRecord) -> bool| Accuracy {
            correct: cases.iter().filter(|c| f(c)).count() as u64,
            total,
        };
        let metric_acc = count(|c| c.metrics_ok);
        let syntax_acc = count(|c| c.syntax_ok);
        let query_acc = count(|c| c.query_ok);
        let errored = cases.iter().filter(|c| c.error.is_some()).count();
        Ok(EvalReport {
            format: REPORT_FORMAT.into(),
            flags,
            cases,
            metric_acc,
            syntax_acc,
            query_acc,
            errored,
            generated_at: None,
        })
    }

    /// QueryAcc <= min(MetricAcc, SyntaxAcc).
    pub fn ordering_holds(&self) -> bool {
        self.query_acc.ratio() <= self.metric_acc.ratio() && self.query_acc.ratio() <= self.syntax_acc.ratio()
    }

    /// Accuracy over the cases carrying `tag`.
    pub fn subset(&self, tag: &str) -> Option<EvalReport> {
        let cases: Vec<CaseRecord> = self
            .cases
            .iter()
            .filter(|c| c.tags.iter().any(|t| t == tag))
            .cloned()
            .collect();
        EvalReport::from_cases(cases, self.flags).ok()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let r: EvalReport = serde_json::from_str(text).map_err(|e| EvalError::Report(e.to_string()))?;
        if r.format != REPORT_FORMAT {
            return Err(EvalError::Report(format!("unexpected format {:?}", r.format)));
        }
        Ok(r)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let flag = |b: bool| if b { "ok" } else { "--" };
        s.push_str(&format!(
            "{:<12} {:<6} {:<7} {:<5}  predicted\n",
            "case", "syntax", "metrics", "query"
        ));
        for c in &self.cases {
            let pred = match (&c.predicted, &c.error) {
                (_, Some(e)) => format!("ERROR: {e}"),
                (Some(p), None) => p.clone(),
                (None, None) => String::new(),
            };
            s.push_str(&format!(
                "{:<12} {:<6} {:<7} {:<5}  {}\n",
                c.id,
                flag(c.syntax_ok),
                flag(c.metrics_ok),
                flag(c.query_ok),
                pred
            ));
        }
        s.push_str(&format!("\nMetricAcc  {}\n", self.metric_acc));
        s.push_str(&format!("SyntaxAcc  {}\n", self.syntax_acc));
        s.push_str(&format!("QueryAcc   {}\n", self.query_acc));
        if self.errored > 0 {
            s.push_str(&format!("errored    {}\n", self.errored));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub promql: String,
    pub usage: Usage,
}

/// Anything that turns a question into a query.
pub trait Predictor: Sync {
    fn predict(&self, case: &BenchmarkCase) -> Result<Prediction, String>;
}

/// Fixed answers by case id, for scoring precomputed outputs.
#[derive(Debug, Clone, Default)]
pub struct FixedPredictions(pub BTreeMap<String, String>);

impl Predictor for FixedPredictions {
    fn predict(&self, case: &BenchmarkCase) -> Result<Prediction, String> {
        self.0
            .get(&case.id)
            .map(|p| Prediction {
                promql: p.clone(),
                usage: Usage::default(),
            })
            .ok_or_else(|| format!("no prediction for {}", case.id))
    }
}

/// The full pipeline under a fixed set of ablation flags.
pub struct PipelinePredictor<'a> {
    pub engine: &'a Engine,
    pub flags: AblationFlags,
}

impl Predictor for PipelinePredictor<'_> {
    fn predict(&self, case: &BenchmarkCase) -> Result<Prediction, String> {
        let a = self.engine.answer(&case.question, self.flags).map_err(|e| e.to_string())?;
        Ok(Prediction {
            usage: a.usage(),
            promql: a.promql,
        })
    }
}

/// Scores every case (in parallel) and aggregates. Harness failures score
/// all-false and are counted in `errored`; the run carries on.
pub fn run_eval(dataset: &[BenchmarkCase], predictor: &dyn Predictor, flags: AblationFlags) -> Result<EvalReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let cases: Vec<CaseRecord> = dataset
        .par_iter()
        .map(|case| match predictor.predict(case) {
            Ok(p) => {
                let s = score_case(case, &p.promql);
                CaseRecord {
                    id: case.id.clone(),
                    question: case.question.clone(),
                    predicted: Some(p.promql),
                    syntax_ok: s.syntax_ok,
                    metrics_ok: s.metrics_ok,
                    query_ok: s.query_ok,
                    usage: p.usage,
                    tags: case.tags.clone(),
                    error: None,
                }
            }
            Err(e) => CaseRecord {
                id: case.id.clone(),
                question: case.question.clone(),
                predicted: None,
                syntax_ok: false,
                metrics_ok: false,
                query_ok: false,
                usage: Usage::default(),
                tags: case.tags.clone(),
                error: Some(e),
            },
        })
        .collect();
    EvalReport::from_cases(cases, flags)
}
