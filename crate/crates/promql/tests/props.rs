//! Property tests: grammar-generated queries round-trip through the
//! renderer, canonicalization is idempotent, metric names are exactly the
//! ones generated, and arbitrary mutations never crash the parser.

use std::collections::BTreeSet;

use promql::{canonicalize, metric_names, parse_query};
use proptest::prelude::*;

/// A generated vector-valued query and the metric names it mentions.
#[derive(Debug, Clone)]
struct Gen {
    text: String,
    names: BTreeSet<String>,
}

fn metric_name() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "up",
        "http_requests_total",
        "node_load1",
        "container_cpu_usage_seconds_total",
        "jvm_memory_used_bytes",
        "a:b_ratio",
    ])
    .prop_map(str::to_string)
}

fn label() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["job", "pod", "node", "mode", "le", "status"]).prop_map(str::to_string)
}

fn matcher() -> impl Strategy<Value = String> {
    (label(), prop::sample::select(vec!["=", "!=", "=~", "!~"]), "[a-z0-9]{0,6}").prop_map(|(l, op, v)| format!("{l}{op}\"{v}\""))
}

fn duration() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["30s", "1m", "5m", "90s", "1h", "1h30m", "2d", "500ms"]).prop_map(str::to_string)
}

fn selector() -> impl Strategy<Value = Gen> {
    (metric_name(), prop::collection::vec(matcher(), 0..3)).prop_map(|(n, ms)| {
        let text = if ms.is_empty() {
            n.clone()
        } else {
            format!("{n}{{{}}}", ms.join(", "))
        };
        Gen {
            text,
            names: BTreeSet::from([n]),
        }
    })
}

fn labels() -> impl Strategy<Value = String> {
    prop::collection::vec(label(), 0..3).prop_map(|ls| ls.join(", "))
}

fn vector_expr() -> impl Strategy<Value = Gen> {
    let leaf = prop_oneof![
        selector(),
        (
            selector(),
            duration(),
            prop::sample::select(vec!["rate", "irate", "increase", "avg_over_time"])
        )
            .prop_map(|(s, d, f)| Gen {
                text: format!("{f}({}[{d}])", s.text),
                names: s.names,
            }),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let map1 = |inner: BoxedStrategy<Gen>, f: fn(&str) -> String| {
            inner.prop_map(move |g| Gen {
                text: f(&g.text),
                names: g.names,
            })
        };
        prop_oneof![
            (
                inner.clone(),
                prop::sample::select(vec!["sum", "avg", "max", "min", "count"]),
                labels(),
                any::<bool>()
            )
                .prop_map(|(g, op, ls, by)| {
                    let kw = if by { "by" } else { "without" };
                    Gen {
                        text: format!("{op} {kw} ({ls}) ({})", g.text),
                        names: g.names,
                    }
                }),
            (
                inner.clone(),
                inner.clone(),
                prop::sample::select(vec![
                    "+", "-", "*", "/", "%", "^", "==", "!=", ">", "<", "and", "or", "unless"
                ])
            )
                .prop_map(|(a, b, op)| Gen {
                    text: format!("({}) {op} ({})", a.text, b.text),
                    names: a.names.union(&b.names).cloned().collect(),
                }),
            (inner.clone(), prop::sample::select(vec!["+", "*", ">", "/"]), 0u32..1000).prop_map(|(a, op, n)| Gen {
                text: format!("{} {op} {n}", a.text),
                names: a.names,
            }),
            map1(inner.clone().boxed(), |t| format!("abs({t})")),
            map1(inner.clone().boxed(), |t| format!("-({t})")),
            map1(inner.clone().boxed(), |t| format!("topk(3, {t})")),
            map1(inner.clone().boxed(), |t| format!("histogram_quantile(0.9, {t})")),
            (inner, duration()).prop_map(|(g, d)| Gen {
                text: format!("max_over_time(({})[{d}:1m])", g.text),
                names: g.names,
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(2000) })]

    #[test]
    fn generated_queries_round_trip(g in vector_expr()) {
        let p = parse_query(&g.text).map_err(|e| TestCaseError::fail(format!("{}: {}", g.text, e.render(&g.text))))?;
        prop_assert_eq!(&metric_names(&p.expr), &g.names);
        let rendered = p.expr.to_string();
        let again = parse_query(&rendered).map_err(|e| TestCaseError::fail(format!("{rendered}: {e}")))?;
        prop_assert_eq!(&again.expr, &p.expr);
        let c = canonicalize(&p.expr);
        prop_assert_eq!(&canonicalize(&c), &c);
        prop_assert_eq!(metric_names(&c), g.names);
    }
}

const SEEDS: &[&str] = &[
    "sum(rate(http_requests_total[5m]))",
    "histogram_quantile(0.99, sum by (le) (rate(x_bucket{a=\"b\"}[5m])))",
    "a / on (b) group_left (c) d offset 5m @ 100",
    "max_over_time(up[1h:5m]) > bool 0.5",
    "label_replace(up, \"h\", \"$1\", \"i\", \"(.*)\")",
    "-2 ^ -3 ^ 2 unless {__name__=~\"x.*\"}",
];

const ALPHABET: &[char] = &[
    '(', ')', '{', '}', '[', ']', ',', '"', '\'', '`', '=', '!', '~', '<', '>', '+', '-', '*', '/', '%', '^', '@', ':', ' ',
    '\n', '\\', 'a', 'z', '0', '9', '.', 'e', 'x', '#', 'é', '\u{0}',
];

#[derive(Debug, Clone)]
enum Edit {
    Insert(usize, char),
    Delete(usize),
    Swap(usize, usize),
}

fn edit() -> impl Strategy<Value = Edit> {
    prop_oneof![
        (any::<usize>(), prop::sample::select(ALPHABET)).prop_map(|(i, c)| Edit::Insert(i, c)),
        any::<usize>().prop_map(Edit::Delete),
        (any::<usize>(), any::<usize>()).prop_map(|(i, j)| Edit::Swap(i, j)),
    ]
}

fn mutate(seed: &str, edits: &[Edit]) -> String {
    let mut chars: Vec<char> = seed.chars().collect();
    for e in edits {
        let n = chars.len();
        match *e {
            Edit::Insert(i, c) => chars.insert(i % (n + 1), c),
            Edit::Delete(i) if n > 0 => {
                chars.remove(i % n);
            }
            Edit::Swap(i, j) if n > 0 => chars.swap(i % n, j % n),
            _ => {}
        }
    }
    chars.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(10_000) })]

    /// The parser returns (never panics) on mutated queries and on raw
    /// strings over PromQL's punctuation; whatever it accepts renders to
    /// text that parses to the same tree.
    #[test]
    fn fuzz_never_panics(
        seed in prop::sample::select(SEEDS),
        edits in prop::collection::vec(edit(), 1..6),
        raw in prop::collection::vec(prop::sample::select(ALPHABET), 0..24),
    ) {
        for q in [mutate(seed, &edits), raw.into_iter().collect::<String>()] {
            if let Ok(p) = parse_query(&q) {
                let text = p.expr.to_string();
                let again = parse_query(&text).map_err(|e| TestCaseError::fail(format!("{q:?} -> {text:?}: {e}")))?;
                prop_assert_eq!(again.expr, p.expr);
            }
        }
    }
}
