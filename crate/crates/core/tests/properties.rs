//! Property tests for the invariants of the graph store, the BM25 index,
//! the path grammar, retrieval and scoring.

mod common;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

use common::oracles::{random_corpus, random_graph, random_query, relation_paths, rng};
use common::{golden_cases, golden_dir, trainticket_graph};
use promkg::eval::{run_eval, score_case, BenchmarkCase, FixedPredictions};
use promkg::golden::MODES;
use promkg::llm::{ChatProvider, ChatRequest, ChatResponse, Client, ClientConfig, LlmError, MockProvider, MockScript};
use promkg::parse::{paths_from_text, ComponentsRelationPath, Hop, PathElement};
use promkg::pipeline::{AblationFlags, Engine};
use promkg::retrieve::{bfs_reasoning_paths, preprocess_paths, KnowledgeIndex, RetrievalConfig, Target};
use promkg::textindex::tokenize;
use promkg::{Bm25Params, Corpus, Direction, Entity, EntityKind, Graph, RelationKind};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }
}

/// The same entities as `g` with a random subset of its relations.
fn sub_graph(g: &Graph, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut sub = Graph::new();
    for e in g.entities() {
        sub.insert_entity(e.clone()).unwrap();
    }
    for rel in g.relations() {
        if r.random_bool(0.6) {
            sub.insert_relation(rel.clone()).unwrap();
        }
    }
    sub
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn schema_closure_and_traversal_symmetry(seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed), 30, 90);
        for r in g.relations() {
            let (s, d) = (g.get(&r.src).unwrap().kind, g.get(&r.dst).unwrap().kind);
            prop_assert!(r.kind.allows(s, d), "{r:?}");
        }
        for e in g.entities() {
            for rel in RelationKind::ALL {
                for dst in g.neighbors(&e.id, rel, Direction::Forward).unwrap() {
                    prop_assert!(g.neighbors(dst, rel, Direction::Backward).unwrap().contains(&e.id));
                }
                for src in g.neighbors(&e.id, rel, Direction::Backward).unwrap() {
                    prop_assert!(g.neighbors(src, rel, Direction::Forward).unwrap().contains(&e.id));
                }
            }
        }
    }

    #[test]
    fn snapshot_round_trip(seed in any::<u64>(), attrs in prop::collection::vec(("[a-z]{1,6}", "\\PC{0,12}"), 0..4)) {
        let mut g = random_graph(&mut rng(seed), 30, 90);
        let m = g.insert_entity(Entity::metric("m_total", "counter").with_description("Requests \"served\"\n")).unwrap();
        let mut lvp = Entity::label_value("pod", "e0");
        for (k, v) in &attrs {
            lvp = lvp.with_attr(format!("x_{k}"), v.clone());
        }
        let lvp = g.insert_entity(lvp).unwrap();
        g.relate(&m, RelationKind::HasLabel, &lvp).unwrap();
        let mut buf = Vec::new();
        g.write_snapshot(&mut buf).unwrap();
        let back = Graph::read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &g);
        let mut again = Vec::new();
        back.write_snapshot(&mut again).unwrap();
        prop_assert_eq!(again, buf);
    }

    #[test]
    fn bm25_nonnegative_deterministic_and_ignores_unrelated_docs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=40);
        let docs = random_corpus(&mut r, n);
        let q = random_query(&mut r);
        let corpus = Corpus::build("p", docs.clone(), Bm25Params::default()).unwrap();
        let hits = corpus.rank(&q, usize::MAX);
        prop_assert!(hits.iter().all(|h| h.score > 0.0));
        prop_assert_eq!(&hits, &corpus.rank(&q, usize::MAX));
        prop_assert_eq!(&hits, &Corpus::build("p", docs.clone(), Bm25Params::default()).unwrap().rank(&q, usize::MAX));

        // A document sharing no term with the query is never returned and
        // does not change which documents match.
        let mut more = docs.clone();
        more.push(("zz-unrelated".into(), "quux frobnicate zorp".into()));
        prop_assume!(tokenize(&q).iter().all(|t| !["quux", "frobnicate", "zorp"].contains(&t.as_str())));
        let hits2 = Corpus::build("p", more, Bm25Params::default()).unwrap().rank(&q, usize::MAX);
        let ids = |h: &[promkg::Hit]| h.iter().map(|x| x.doc.clone()).collect::<BTreeSet<_>>();
        prop_assert_eq!(ids(&hits), ids(&hits2));
    }

    #[test]
    fn path_text_parsing_is_total(text in "\\PC{0,200}") {
        let (paths, _skipped) = paths_from_text(&text);
        for p in paths {
            prop_assert!(p.validate().is_ok());
        }
    }

    #[test]
    fn path_text_parsing_with_grammar_noise(pieces in prop::collection::vec(prop::sample::select(vec![
        "(", ")", "-", "->", "<-", ":", "?", "pod", "node", "service", "targets", "hosts", "order service", " ", "\n", "Paths:",
    ]), 0..40)) {
        let (paths, _skipped) = paths_from_text(&pieces.concat());
        for p in paths {
            prop_assert!(p.validate().is_ok());
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    /// Split and resolved pieces always start at a concrete entity.
    #[test]
    fn preprocess_never_starts_at_a_placeholder(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 25, 70);
        let idx = KnowledgeIndex::build(&g);
        let ids: Vec<_> = g.entities().map(|e| e.id.clone()).collect();
        for _ in 0..30 {
            let start = ids.choose(&mut r).unwrap();
            let candidates = relation_paths(&g, start, 3, 3, &mut r);
            let resolved = candidates.choose(&mut r).unwrap();
            // Back to model-facing form, with the start turned into a
            // placeholder half of the time so splitting is exercised.
            let name = |id: &promkg::EntityId| g.get(id).unwrap().name.clone();
            let start_kind = g.get(&resolved.start).unwrap().kind;
            let first = if r.random_bool(0.5) && resolved.hops.iter().any(|(_, t)| matches!(t, Target::Entity(_))) {
                PathElement::placeholder(start_kind)
            } else {
                PathElement::named(start_kind, name(&resolved.start))
            };
            let mut p = ComponentsRelationPath::single(first);
            for (hop, t) in &resolved.hops {
                let e = match t {
                    Target::Entity(id) => PathElement::named(g.get(id).unwrap().kind, name(id)),
                    Target::Any(k) => PathElement::placeholder(*k),
                };
                p = p.then(*hop, e);
            }
            let (out, _) = preprocess_paths(&[p], &g, &idx);
            for piece in out {
                prop_assert!(g.contains(&piece.start));
            }
        }
    }

    /// Adding relations never removes reasoning paths.
    #[test]
    fn bfs_is_monotone_in_the_graph(seed in any::<u64>()) {
        let mut r = rng(seed);
        let big = random_graph(&mut r, 25, 80);
        let small = sub_graph(&big, seed ^ 0x5eed);
        let ids: Vec<_> = big.entities().map(|e| e.id.clone()).collect();
        for _ in 0..10 {
            let start = ids.choose(&mut r).unwrap();
            for path in relation_paths(&small, start, 2, 2, &mut r) {
                let few: BTreeSet<_> = bfs_reasoning_paths(&small, &path).unwrap().paths.into_iter().map(|p| p.hops).collect();
                let many: BTreeSet<_> = bfs_reasoning_paths(&big, &path).unwrap().paths.into_iter().map(|p| p.hops).collect();
                prop_assert!(few.is_subset(&many), "{path:?}");
            }
        }
    }

    /// Aggregates are exact counts of the per-case booleans, and the
    /// accuracy ordering holds whatever the predictions are.
    #[test]
    fn eval_aggregates_are_exact(picks in prop::collection::vec((0usize..8, 0usize..8), 1..30)) {
        const QUERIES: [&str; 8] = [
            "up == 0",
            "up == 1",
            "sum(rate(http_requests_total[5m]))",
            "sum(rate(http_requests_total[300s]))",
            "rate(errors_total[5m])",
            "made_up(errors_total)",
            "sum(rate(",
            "node_load1{node=\"node2\"}",
        ];
        let mut dataset = Vec::new();
        let mut preds = std::collections::BTreeMap::new();
        for (i, (gold, pred)) in picks.iter().enumerate() {
            // The two malformed entries are never gold.
            let gold = QUERIES[[0, 1, 2, 3, 4, 7][gold % 6]];
            let id = format!("c{i:02}");
            dataset.push(BenchmarkCase { id: id.clone(), question: format!("q{i}"), gold: vec![gold.into()], tags: vec![] });
            preds.insert(id, QUERIES[*pred].to_string());
        }
        let report = run_eval(&dataset, &FixedPredictions(preds.clone()), AblationFlags::FULL).unwrap();
        let scores: Vec<_> = dataset.iter().map(|c| score_case(c, &preds[&c.id])).collect();
        let count = |f: fn(&promkg::eval::CaseScore) -> bool| scores.iter().filter(|s| f(s)).count() as u64;
        prop_assert_eq!(report.metric_acc.correct, count(|s| s.metrics_ok));
        prop_assert_eq!(report.syntax_acc.correct, count(|s| s.syntax_ok));
        prop_assert_eq!(report.query_acc.correct, count(|s| s.query_ok));
        prop_assert_eq!(report.query_acc.total, dataset.len() as u64);
        prop_assert!(report.ordering_holds());
        prop_assert!(scores.iter().all(|s| !s.query_ok || (s.syntax_ok && s.metrics_ok)));
    }
}

/// Forwards to a mock provider and counts the calls that reach it.
struct Counting {
    inner: MockProvider,
    calls: AtomicUsize,
}

impl ChatProvider for Counting {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(req)
    }

    fn name(&self) -> &str {
        "counting"
    }
}

/// Replaying a question twice gives identical answers, and the stage trace
/// records every model call exactly once.
#[test]
fn pipeline_is_deterministic_and_traces_every_call() {
    let script = MockScript::load(golden_dir().join("mock_script.jsonl")).unwrap();
    let provider = Arc::new(Counting {
        inner: MockProvider::new(script),
        calls: AtomicUsize::new(0),
    });
    let client = Client::new(provider.clone(), ClientConfig::default());
    let engine = Engine::new(trainticket_graph(), client, RetrievalConfig::default());
    for case in golden_cases() {
        for (mode, flags) in MODES {
            let before = provider.calls.load(Ordering::SeqCst);
            let a = engine.answer(&case.question, flags).unwrap();
            let made = provider.calls.load(Ordering::SeqCst) - before;
            let traced: usize = a.trace.iter().map(|s| s.llm_calls.len()).sum();
            assert_eq!(traced, made, "{} ({mode})", case.id);
            let b = engine.answer(&case.question, flags).unwrap();
            assert_eq!(a.promql, b.promql);
            assert_eq!(a.retrieved, b.retrieved);
            assert!(a.prompt_tokens <= ClientConfig::default().context_limit);
        }
    }
}

#[test]
fn metric_kinds_never_in_paths() {
    let (paths, skipped) = paths_from_text("(metric:node_load1)-has_label->(label_value_pair:?)\n(pod:a)<-hosts-(node:?)");
    assert_eq!(paths.len(), 1);
    assert_eq!(skipped.len(), 1);
    assert!(paths[0].elements().all(|e| e.kind.is_component()));
    assert_eq!(paths[0].hops[0].0, Hop::backward(RelationKind::Hosts));
    assert_eq!(paths[0].hops[0].1.kind, EntityKind::Node);
}
