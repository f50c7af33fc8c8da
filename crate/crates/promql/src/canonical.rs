//! Normal form used to decide whether two queries are written equivalently.
//!
//! Canonicalization is purely syntactic: it removes redundant parentheses and
//! unary plus, folds `{__name__="m"}` into the metric name, sorts and
//! deduplicates label matchers and label lists, drops `by ()` and `offset 0s`.
//! Operands of commutative operators are left in place.

use std::collections::BTreeSet;

use crate::ast::*;
use crate::parser::parse_query;

pub fn canonicalize(expr: &Expr) -> Expr {
    match expr {
        Expr::Number(_) | Expr::String(_) => expr.clone(),
        Expr::Selector(sel) => Expr::Selector(canonical_selector(sel)),
        Expr::Matrix { selector, range } => Expr::Matrix {
            selector: canonical_selector(selector),
            range: *range,
        },
        Expr::Subquery(sq) => Expr::Subquery(SubqueryExpr {
            expr: Box::new(canonicalize(&sq.expr)),
            range: sq.range,
            step: sq.step,
            offset: canonical_offset(sq.offset),
            at: sq.at,
        }),
        Expr::Paren(inner) => canonicalize(inner),
        Expr::Unary { op: UnaryOp::Pos, expr } => canonicalize(expr),
        Expr::Unary { op, expr } => Expr::Unary {
            op: *op,
            expr: Box::new(canonicalize(expr)),
        },
        Expr::Binary(b) => Expr::Binary(BinaryExpr {
            op: b.op,
            lhs: Box::new(canonicalize(&b.lhs)),
            rhs: Box::new(canonicalize(&b.rhs)),
            modifier: BinModifier {
                return_bool: b.modifier.return_bool,
                matching: b.modifier.matching.as_ref().map(|m| VectorMatching {
                    kind: m.kind,
                    labels: sorted_labels(&m.labels),
                    group: m.group.as_ref().map(|(side, labels)| (*side, sorted_labels(labels))),
                }),
            },
        }),
        Expr::Aggregate(a) => Expr::Aggregate(AggregateExpr {
            op: a.op,
            param: a.param.as_ref().map(|p| Box::new(canonicalize(p))),
            expr: Box::new(canonicalize(&a.expr)),
            grouping: a.grouping.as_ref().and_then(|g| {
                if g.kind == GroupingKind::By && g.labels.is_empty() {
                    None
                } else {
                    Some(Grouping {
                        kind: g.kind,
                        labels: sorted_labels(&g.labels),
                    })
                }
            }),
        }),
        Expr::Call { func, args } => Expr::Call {
            func: func.clone(),
            args: args.iter().map(canonicalize).collect(),
        },
    }
}

fn sorted_labels(labels: &[String]) -> Vec<String> {
    labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
}

fn canonical_offset(off: Option<Offset>) -> Option<Offset> {
    off.filter(|o| !o.duration.is_zero())
}

fn canonical_selector(sel: &VectorSelector) -> VectorSelector {
    let mut name = sel.name.clone();
    let mut matchers: Vec<LabelMatcher> = sel.matchers.clone();
    if name.is_none() {
        let name_eq: Vec<usize> = matchers
            .iter()
            .enumerate()
            .filter(|(_, m)| m.name == "__name__")
            .map(|(i, _)| i)
            .collect();
        if let [i] = name_eq[..] {
            if matchers[i].op == MatchOp::Equal && !matchers[i].value.is_empty() {
                name = Some(matchers.remove(i).value);
            }
        }
    }
    matchers.sort();
    matchers.dedup();
    VectorSelector {
        name,
        matchers,
        offset: canonical_offset(sel.offset),
        at: sel.at,
    }
}

/// Metric names referenced by every selector in the tree, including names
/// given through `__name__="..."` equality matchers.
pub fn metric_names(expr: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_names(expr, &mut out);
    out
}

fn selector_names(sel: &VectorSelector, out: &mut BTreeSet<String>) {
    if let Some(n) = &sel.name {
        out.insert(n.clone());
    }
    for m in &sel.matchers {
        if m.name == "__name__" && m.op == MatchOp::Equal && !m.value.is_empty() {
            out.insert(m.value.clone());
        }
    }
}

fn collect_names(expr: &Expr, out: &mut BTreeSet<String>) {
    match expr {
        Expr::Number(_) | Expr::String(_) => {}
        Expr::Selector(sel) => selector_names(sel, out),
        Expr::Matrix { selector, .. } => selector_names(selector, out),
        Expr::Subquery(sq) => collect_names(&sq.expr, out),
        Expr::Paren(e) | Expr::Unary { expr: e, .. } => collect_names(e, out),
        Expr::Binary(b) => {
            collect_names(&b.lhs, out);
            collect_names(&b.rhs, out);
        }
        Expr::Aggregate(a) => {
            if let Some(p) = &a.param {
                collect_names(p, out);
            }
            collect_names(&a.expr, out);
        }
        Expr::Call { args, .. } => args.iter().for_each(|a| collect_names(a, out)),
    }
}

/// True when `pred` parses and its canonical form equals the canonical form
/// of at least one parseable gold query.
pub fn queries_equivalent<S: AsRef<str>>(pred: &str, golds: &[S]) -> bool {
    let Ok(p) = parse_query(pred) else {
        return false;
    };
    let cp = canonicalize(&p.expr);
    golds
        .iter()
        .any(|g| parse_query(g.as_ref()).map(|g| canonicalize(&g.expr) == cp).unwrap_or(false))
}
