//! `promkg`: build the knowledge graph, ask questions, run evaluations,
//! serve the pipeline over HTTP.
//!
//! Exit codes: 0 success; 1 runtime failure (model errors, failed sources,
//! errored eval cases, `--strict` with an invalid query, stale golden
//! files); 2 usage errors (bad flags or config, missing or unreadable
//! inputs).

mod config;
mod serve;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use config::{Config, Overrides};
use promkg::eval::{load_dataset, run_eval, PipelinePredictor};
use promkg::ingest::{build_graph_timed, fetch_all, IngestError, SourceConfig};
use promkg::pipeline::{AblationFlags, Answer, Engine};
use promkg::synthetic::{self, REFERENCE_SCALE};
use promkg::{EntityId, EntityKind, Graph};

#[derive(Parser)]
#[command(
    name = "promkg",
    version,
    about = "Natural-language questions to PromQL, grounded in a system knowledge graph"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ablate {
    /// Without system-component knowledge.
    NoSk,
    /// Without metric knowledge.
    NoMk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    /// JSON.
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Collect the sources and write a graph snapshot.
    Build {
        /// Read file sources from this directory (standard fixture layout).
        #[arg(long, conflicts_with = "synthetic")]
        fixture_dir: Option<PathBuf>,
        /// Use the generated reference-scale bundle instead of real sources.
        #[arg(long)]
        synthetic: bool,
        /// Also write the build report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Translate a question into PromQL.
    Ask {
        question: Option<String>,
        /// Print the stage trace to stderr.
        #[arg(long)]
        verbose: bool,
        /// Exit 1 when the generated query does not parse.
        #[arg(long)]
        strict: bool,
        #[arg(long, value_enum)]
        ablate: Option<Ablate>,
        /// Read questions from stdin, one per line.
        #[arg(long, conflicts_with = "question")]
        repl: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Score the pipeline on a dataset.
    Eval {
        dataset: PathBuf,
        #[arg(long, value_enum)]
        ablate: Option<Ablate>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve `POST /ask` over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
    /// Show graph contents.
    Inspect {
        /// List entities of one kind.
        #[arg(long)]
        kind: Option<String>,
        /// Show one entity and its relations, by id (e.g. `Pod/pod1`).
        #[arg(long)]
        entity: Option<String>,
    },
    /// Re-record the golden suite's mock script and expected outputs.
    Record {
        #[arg(long, default_value = "fixtures/golden/cases.json")]
        cases: PathBuf,
        #[arg(long, default_value = "fixtures/golden")]
        out_dir: PathBuf,
        /// Compare with the files on disk instead of writing them.
        #[arg(long)]
        check: bool,
    },
}

/// An error with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: e.into(),
    }
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: e.into(),
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .init();
    let cli = Cli::parse();
    let config = match Config::load(&cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command, config) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command, config: Config) -> Outcome {
    match command {
        Command::Build {
            fixture_dir,
            synthetic,
            report,
        } => cmd_build(&config, fixture_dir, synthetic, report),
        Command::Ask {
            question,
            verbose,
            strict,
            ablate,
            repl,
            format,
        } => cmd_ask(&config, question, verbose, strict, flags(&config, ablate), repl, format),
        Command::Eval {
            dataset,
            ablate,
            format,
            out,
        } => cmd_eval(&config, &dataset, flags(&config, ablate), format, out),
        Command::Serve { bind } => {
            let engine = engine(&config)?;
            serve::run(engine, config.ablation, &bind).map_err(runtime)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Inspect { kind, entity } => cmd_inspect(&config, kind, entity),
        Command::Record { cases, out_dir, check } => cmd_record(&config, &cases, &out_dir, check),
    }
}

fn flags(config: &Config, ablate: Option<Ablate>) -> AblationFlags {
    match ablate {
        Some(Ablate::NoSk) => AblationFlags::NO_SK,
        Some(Ablate::NoMk) => AblationFlags::NO_MK,
        None => config.ablation,
    }
}

fn load_graph(config: &Config) -> Result<Graph, Failure> {
    let path = config.graph_path();
    if !path.is_file() {
        return Err(usage(anyhow::anyhow!(
            "graph snapshot {} not found; run `promkg build` first",
            path.display()
        )));
    }
    Graph::load(&path)
        .with_context(|| format!("loading {}", path.display()))
        .map_err(usage)
}

fn engine(config: &Config) -> Result<Engine, Failure> {
    let graph = load_graph(config)?;
    let client = config.client().map_err(usage)?;
    Ok(Engine::new(graph, client, config.retrieval.clone()))
}

fn ingest_failure(e: IngestError) -> Failure {
    let code = match &e {
        IngestError::Io { .. } => 2,
        IngestError::Sources(fs) if fs.iter().all(|f| matches!(f.error, IngestError::Io { .. })) => 2,
        _ => 1,
    };
    Failure { code, error: e.into() }
}

fn cmd_build(config: &Config, fixture_dir: Option<PathBuf>, synthetic: bool, report_path: Option<PathBuf>) -> Outcome {
    let bundle = if synthetic {
        synthetic::generate(&REFERENCE_SCALE).map_err(runtime)?
    } else {
        let sources = match fixture_dir.or_else(|| config.fixture_dir.clone()) {
            Some(dir) => SourceConfig {
                linking: config.sources.linking.clone(),
                ..SourceConfig::from_fixture_dir(&dir).map_err(ingest_failure)?
            },
            None => config.sources.clone(),
        };
        if sources.is_empty() {
            eprintln!("warning: no sources configured; writing an empty graph");
        }
        fetch_all(&sources).map_err(ingest_failure)?
    };
    let built = build_graph_timed(&bundle, &config.sources.linking).map_err(ingest_failure)?;
    let out = config.graph_path();
    built
        .graph
        .save(&out)
        .with_context(|| format!("writing {}", out.display()))
        .map_err(runtime)?;
    print!("{}", built.report.table());
    println!(
        "\nwrote {} ({} entities, {} relations) in {:.2?}",
        out.display(),
        built.graph.entity_count(),
        built.graph.relation_count(),
        built.elapsed
    );
    if let Some(p) = report_path {
        std::fs::write(&p, serde_json::to_string_pretty(&built.report).expect("report serializes"))
            .with_context(|| format!("writing {}", p.display()))
            .map_err(runtime)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_answer(g: &Graph, a: &Answer, verbose: bool, format: Format) {
    match format {
        Format::Structured => println!("{}", serde_json::to_string(a).expect("answer serializes")),
        Format::Text => println!("{}", a.promql),
    }
    if !a.ast_valid {
        eprintln!("warning: the generated query does not parse");
    }
    for d in &a.query_diagnostics {
        eprintln!("{d}");
    }
    if verbose {
        for s in &a.trace {
            eprintln!(
                "[{}] {} ms, {} call(s), {} tokens",
                s.stage,
                s.duration_ms,
                s.llm_calls.len(),
                s.usage.total()
            );
            for d in &s.diagnostics {
                eprintln!("    {d}");
            }
        }
        for m in &a.retrieved.metrics {
            eprintln!("metric: {} ({})", m.name, m.metric_type);
        }
        for t in &a.retrieved.triples {
            eprintln!("triple: {}", t.render(g));
        }
        eprintln!("prompt: ~{} tokens", a.prompt_tokens);
    }
}

fn cmd_ask(
    config: &Config,
    question: Option<String>,
    verbose: bool,
    strict: bool,
    flags: AblationFlags,
    repl: bool,
    format: Format,
) -> Outcome {
    if !repl && question.as_deref().is_none_or(|q| q.trim().is_empty()) {
        return Err(usage(anyhow::anyhow!("a non-empty question is required (or use --repl)")));
    }
    let engine = engine(config)?;
    if repl {
        let stdin = std::io::stdin();
        let mut failed = false;
        loop {
            eprint!("> ");
            let _ = std::io::stderr().flush();
            let mut line = String::new();
            if stdin.lock().read_line(&mut line).map_err(runtime)? == 0 {
                break;
            }
            let q = line.trim();
            if q.is_empty() {
                continue;
            }
            if q == "exit" || q == "quit" {
                break;
            }
            match engine.answer(q, flags) {
                Ok(a) => {
                    failed |= strict && !a.ast_valid;
                    print_answer(&engine.graph, &a, verbose, format);
                }
                Err(e) => {
                    failed = true;
                    eprintln!("error: {e}");
                }
            }
        }
        return Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS });
    }
    let q = question.expect("checked above");
    let a = engine.answer(&q, flags).map_err(runtime)?;
    print_answer(&engine.graph, &a, verbose, format);
    if strict && !a.ast_valid {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(config: &Config, dataset: &Path, flags: AblationFlags, format: Format, out: Option<PathBuf>) -> Outcome {
    let cases = load_dataset(dataset)
        .with_context(|| format!("loading {}", dataset.display()))
        .map_err(usage)?;
    let engine = engine(config)?;
    let predictor = PipelinePredictor { engine: &engine, flags };
    let report = run_eval(&cases, &predictor, flags).map_err(usage)?;
    let text = match format {
        Format::Structured => report.to_json() + "\n",
        Format::Text => report.to_table(),
    };
    match out {
        Some(p) => std::fs::write(&p, text)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(runtime)?,
        None => emit(&text),
    }
    if report.errored > 0 {
        eprintln!("{} case(s) failed to run", report.errored);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_inspect(config: &Config, kind: Option<String>, entity: Option<String>) -> Outcome {
    let g = load_graph(config)?;
    let mut out = String::new();
    if let Some(k) = kind {
        let kind: EntityKind = k.parse().map_err(usage)?;
        for id in g.entities_of_kind(kind) {
            let e = g.get(id).expect("indexed entity");
            match &e.description {
                Some(d) => out.push_str(&format!("{}\t{}\t{d}\n", e.id, e.name)),
                None => out.push_str(&format!("{}\t{}\n", e.id, e.name)),
            }
        }
    } else if let Some(raw) = entity {
        let id = EntityId::from_raw(raw);
        let Some(e) = g.get(&id) else {
            return Err(usage(anyhow::anyhow!("no entity {id}")));
        };
        out.push_str(&serde_json::to_string_pretty(e).expect("entity serializes"));
        out.push('\n');
        for r in g.relations().filter(|r| r.src == id || r.dst == id) {
            out.push_str(&format!("({}) -{}-> ({})\n", g.label(&r.src), r.kind, g.label(&r.dst)));
        }
    } else {
        out.push_str("Entity              Count\n");
        for (k, n) in g.entity_counts() {
            out.push_str(&format!("{:<20}{n}\n", k.as_str()));
        }
        out.push_str("\nRelation            Count\n");
        for (k, n) in g.relation_counts() {
            out.push_str(&format!("{:<20}{n}\n", k.as_str()));
        }
    }
    emit(&out);
    Ok(ExitCode::SUCCESS)
}

/// Writes to stdout; a reader that went away (`| head`) is not an error.
fn emit(text: &str) {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: writing output: {e}");
        }
    }
}

fn cmd_record(config: &Config, cases_path: &Path, out_dir: &Path, check: bool) -> Outcome {
    use promkg::golden;
    let g = load_graph(config)?;
    let cases = golden::load_cases(cases_path).map_err(usage)?;
    let rec = golden::record(&g, &cases, &config.retrieval, &config.llm.client).map_err(runtime)?;
    if check {
        let mut stale = Vec::new();
        for (name, want) in [
            ("mock_script.jsonl", rec.script_jsonl()),
            ("expected.jsonl", rec.outputs_jsonl()),
            ("dataset.jsonl", golden::Recording::dataset_jsonl(&cases)),
        ] {
            let have = std::fs::read_to_string(out_dir.join(name)).unwrap_or_default();
            if have != want {
                stale.push(name);
            }
        }
        if stale.is_empty() {
            println!("golden files are up to date");
            return Ok(ExitCode::SUCCESS);
        }
        eprintln!("stale: {}", stale.join(", "));
        return Ok(ExitCode::from(1));
    }
    rec.save(&cases, out_dir).map_err(runtime)?;
    println!(
        "recorded {} prompts and {} outputs for {} cases into {}",
        rec.script.len(),
        rec.outputs.len(),
        cases.len(),
        out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}
