//! Recursive-descent PromQL parser with precedence climbing and type checking.
//!
//! Precedence, lowest first: `or`; `and`/`unless`; comparisons; `+ -`;
//! `* / % atan2`; unary sign; `^` (right associative). A unary sign applies to
//! a whole power chain, so `-2 ^ 2` is `-(2 ^ 2)`.

use std::ops::Range;

use regex::Regex;

use crate::ast::*;
use crate::diagnostic::{Diagnostic, NONSTANDARD_FUNCTION};
use crate::functions::{self, ValueType};
use crate::lexer::{tokenize, Token, TokenKind};

const MAX_DEPTH: usize = 128;

/// A successfully parsed query plus any non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub expr: Expr,
    pub value_type: ValueType,
    pub diagnostics: Vec<Diagnostic>,
}

impl Parsed {
    /// True when no diagnostics were raised, i.e. the query would pass a
    /// Prometheus syntax check.
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn has_nonstandard_function(&self) -> bool {
        self.diagnostics.iter().any(|d| d.code == Some(NONSTANDARD_FUNCTION))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid PromQL: {}", .diagnostics.first().map(|d| d.message.as_str()).unwrap_or("unknown error"))]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseError {
    fn single(d: Diagnostic) -> Self {
        Self { diagnostics: vec![d] }
    }

    pub fn render(&self, input: &str) -> String {
        self.diagnostics
            .iter()
            .map(|d| d.render(input))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Parses and type-checks a PromQL query. Never panics.
pub fn parse_query(input: &str) -> Result<Parsed, ParseError> {
    let tokens = tokenize(input).map_err(ParseError::single)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
        warnings: Vec::new(),
        input_len: input.len(),
    };
    if p.peek_kind() == &TokenKind::Eof {
        return Err(ParseError::single(Diagnostic::error(0..input.len(), "empty query")));
    }
    let node = p.expr(0).map_err(ParseError::single)?;
    if p.peek_kind() != &TokenKind::Eof {
        let t = p.peek().clone();
        return Err(ParseError::single(Diagnostic::error(
            t.span,
            format!("unexpected {}", t.kind.describe()),
        )));
    }
    Ok(Parsed {
        expr: node.expr,
        value_type: node.ty,
        diagnostics: p.warnings,
    })
}

struct Node {
    expr: Expr,
    ty: ValueType,
    span: Range<usize>,
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    warnings: Vec<Diagnostic>,
    input_len: usize,
}

fn keyword(t: &TokenKind) -> Option<String> {
    match t {
        TokenKind::Ident(s) => Some(s.to_ascii_lowercase()),
        _ => None,
    }
}

const RESERVED: &[&str] = &[
    "by",
    "without",
    "on",
    "ignoring",
    "group_left",
    "group_right",
    "bool",
    "offset",
    "and",
    "or",
    "unless",
    "atan2",
];

fn is_label_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn compile_anchored(pattern: &str) -> Result<Regex, regex::Error> {
    Regex::new(&format!("^(?:{pattern})$"))
}

fn matcher_matches_empty(m: &LabelMatcher) -> bool {
    match m.op {
        MatchOp::Equal => m.value.is_empty(),
        MatchOp::NotEqual => !m.value.is_empty(),
        MatchOp::RegexMatch => compile_anchored(&m.value).map(|r| r.is_match("")).unwrap_or(false),
        MatchOp::RegexNoMatch => !compile_anchored(&m.value).map(|r| r.is_match("")).unwrap_or(false),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.peek().kind
    }

    fn peek_kind_at(&self, off: usize) -> &TokenKind {
        &self.tokens[(self.pos + off).min(self.tokens.len() - 1)].kind
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].span.end
        }
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let t = self.peek();
        Diagnostic::error(
            t.span.start.min(self.input_len)..t.span.end.min(self.input_len),
            format!("unexpected {}, expected {expected}", t.kind.describe()),
        )
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> PResult<Token> {
        if *self.peek_kind() == kind {
            Ok(self.bump())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        keyword(self.peek_kind()).is_some_and(|k| k == kw)
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let span = self.peek().span.clone();
            return Err(Diagnostic::error(span, "expression nested too deeply"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn peek_binary_op(&self) -> Option<BinaryOp> {
        Some(match self.peek_kind() {
            TokenKind::Add => BinaryOp::Add,
            TokenKind::Sub => BinaryOp::Sub,
            TokenKind::Mul => BinaryOp::Mul,
            TokenKind::Div => BinaryOp::Div,
            TokenKind::Mod => BinaryOp::Mod,
            TokenKind::Pow => BinaryOp::Pow,
            TokenKind::Eql => BinaryOp::Eql,
            TokenKind::Neq => BinaryOp::Neq,
            TokenKind::Lt => BinaryOp::Lt,
            TokenKind::Lte => BinaryOp::Lte,
            TokenKind::Gt => BinaryOp::Gt,
            TokenKind::Gte => BinaryOp::Gte,
            TokenKind::Ident(s) => match s.to_ascii_lowercase().as_str() {
                "and" => BinaryOp::And,
                "or" => BinaryOp::Or,
                "unless" => BinaryOp::Unless,
                "atan2" => BinaryOp::Atan2,
                _ => return None,
            },
            _ => return None,
        })
    }

    fn expr(&mut self, min_prec: u8) -> PResult<Node> {
        self.enter()?;
        let result = self.expr_inner(min_prec);
        self.leave();
        result
    }

    fn expr_inner(&mut self, min_prec: u8) -> PResult<Node> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let op_tok = self.bump();
            let modifier = self.bin_modifier(op)?;
            let next_min = if op.is_right_assoc() { prec } else { prec + 1 };
            let rhs = self.expr(next_min)?;
            lhs = self.check_binary(op, modifier, lhs, rhs, op_tok.span)?;
        }
        Ok(lhs)
    }

    fn bin_modifier(&mut self, op: BinaryOp) -> PResult<BinModifier> {
        let mut m = BinModifier::default();
        if self.peek_keyword("bool") {
            let t = self.bump();
            if !op.is_comparison() {
                return Err(Diagnostic::error(
                    t.span,
                    "bool modifier can only be used on comparison operators",
                ));
            }
            m.return_bool = true;
        }
        let kind = if self.peek_keyword("on") {
            Some(MatchingKind::On)
        } else if self.peek_keyword("ignoring") {
            Some(MatchingKind::Ignoring)
        } else {
            None
        };
        if let Some(kind) = kind {
            self.bump();
            let labels = self.label_list()?;
            let side = if self.peek_keyword("group_left") {
                Some(GroupSide::Left)
            } else if self.peek_keyword("group_right") {
                Some(GroupSide::Right)
            } else {
                None
            };
            let group = match side {
                Some(side) => {
                    let t = self.bump();
                    if op.is_set_op() {
                        return Err(Diagnostic::error(t.span, "no grouping allowed for set operations"));
                    }
                    let labels = if *self.peek_kind() == TokenKind::LParen {
                        self.label_list()?
                    } else {
                        Vec::new()
                    };
                    Some((side, labels))
                }
                None => None,
            };
            m.matching = Some(VectorMatching { kind, labels, group });
        } else if self.peek_keyword("group_left") || self.peek_keyword("group_right") {
            let t = self.bump();
            return Err(Diagnostic::error(
                t.span,
                "group modifier requires a preceding on or ignoring clause",
            ));
        }
        Ok(m)
    }

    fn check_binary(
        &mut self,
        op: BinaryOp,
        modifier: BinModifier,
        lhs: Node,
        rhs: Node,
        op_span: Range<usize>,
    ) -> PResult<Node> {
        let span = lhs.span.start..rhs.span.end;
        for side in [&lhs, &rhs] {
            if !matches!(side.ty, ValueType::Scalar | ValueType::Vector) {
                return Err(Diagnostic::error(
                    side.span.clone(),
                    format!(
                        "binary expression must contain only scalar and instant vector types, got {}",
                        side.ty
                    ),
                ));
            }
        }
        let both_vectors = lhs.ty == ValueType::Vector && rhs.ty == ValueType::Vector;
        if op.is_set_op() && !both_vectors {
            return Err(Diagnostic::error(
                op_span,
                format!("set operator \"{}\" not allowed in binary scalar expression", op.as_str()),
            ));
        }
        if op.is_comparison() && lhs.ty == ValueType::Scalar && rhs.ty == ValueType::Scalar && !modifier.return_bool {
            return Err(Diagnostic::error(
                op_span,
                "comparisons between scalars must use bool modifier",
            ));
        }
        if modifier.matching.is_some() && !both_vectors {
            return Err(Diagnostic::error(
                op_span,
                "vector matching only allowed between instant vectors",
            ));
        }
        let ty = if lhs.ty == ValueType::Vector || rhs.ty == ValueType::Vector {
            ValueType::Vector
        } else {
            ValueType::Scalar
        };
        Ok(Node {
            expr: Expr::Binary(BinaryExpr {
                op,
                lhs: Box::new(lhs.expr),
                rhs: Box::new(rhs.expr),
                modifier,
            }),
            ty,
            span,
        })
    }

    fn unary(&mut self) -> PResult<Node> {
        let op = match self.peek_kind() {
            TokenKind::Sub => UnaryOp::Neg,
            TokenKind::Add => UnaryOp::Pos,
            _ => return self.postfix(),
        };
        let start = self.bump().span.start;
        let inner = self.expr(POW_PRECEDENCE)?;
        if !matches!(inner.ty, ValueType::Scalar | ValueType::Vector) {
            return Err(Diagnostic::error(
                inner.span,
                format!(
                    "unary expression only allowed on expressions of type scalar or instant vector, got {}",
                    inner.ty
                ),
            ));
        }
        Ok(Node {
            span: start..inner.span.end,
            ty: inner.ty,
            expr: Expr::Unary {
                op,
                expr: Box::new(inner.expr),
            },
        })
    }

    fn postfix(&mut self) -> PResult<Node> {
        let mut node = self.primary()?;
        loop {
            match self.peek_kind() {
                TokenKind::LBracket => node = self.range_or_subquery(node)?,
                TokenKind::At => node = self.at_modifier(node)?,
                TokenKind::Ident(s) if s.eq_ignore_ascii_case("offset") => node = self.offset_modifier(node)?,
                _ => return Ok(node),
            }
        }
    }

    fn duration(&mut self, what: &str) -> PResult<(Duration, Range<usize>)> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Duration(d) => {
                self.bump();
                Ok((d, t.span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn range_or_subquery(&mut self, node: Node) -> PResult<Node> {
        let open = self.bump();
        let (range, range_span) = self.duration("duration in range")?;
        if range.is_zero() {
            return Err(Diagnostic::error(range_span, "range duration must be greater than 0"));
        }
        if *self.peek_kind() == TokenKind::Colon {
            self.bump();
            let step = match self.peek_kind() {
                TokenKind::Duration(_) => {
                    let (d, sp) = self.duration("subquery step")?;
                    if d.is_zero() {
                        return Err(Diagnostic::error(sp, "subquery step must be greater than 0"));
                    }
                    Some(d)
                }
                _ => None,
            };
            let close = self.expect(TokenKind::RBracket, "\"]\"")?;
            if node.ty != ValueType::Vector {
                return Err(Diagnostic::error(
                    node.span.start..close.span.end,
                    format!("subquery is only allowed on instant vector, got {}", node.ty),
                ));
            }
            return Ok(Node {
                span: node.span.start..close.span.end,
                ty: ValueType::Matrix,
                expr: Expr::Subquery(SubqueryExpr {
                    expr: Box::new(node.expr),
                    range,
                    step,
                    offset: None,
                    at: None,
                }),
            });
        }
        let close = self.expect(TokenKind::RBracket, "\"]\" or \":\"")?;
        match node.expr {
            Expr::Selector(sel) if sel.offset.is_none() && sel.at.is_none() => Ok(Node {
                span: node.span.start..close.span.end,
                ty: ValueType::Matrix,
                expr: Expr::Matrix { selector: sel, range },
            }),
            _ => Err(Diagnostic::error(
                open.span.start..close.span.end,
                "ranges only allowed for vector selectors",
            )),
        }
    }

    fn offset_modifier(&mut self, mut node: Node) -> PResult<Node> {
        let kw = self.bump();
        let negative = if *self.peek_kind() == TokenKind::Sub {
            self.bump();
            true
        } else {
            false
        };
        let (duration, dspan) = self.duration("duration after offset")?;
        let off = Offset { negative, duration };
        let slot = match &mut node.expr {
            Expr::Selector(sel) => &mut sel.offset,
            Expr::Matrix { selector, .. } => &mut selector.offset,
            Expr::Subquery(sq) => &mut sq.offset,
            _ => {
                return Err(Diagnostic::error(
                    kw.span,
                    "offset modifier must be preceded by an instant vector selector or range vector selector or a subquery",
                ))
            }
        };
        if slot.is_some() {
            return Err(Diagnostic::error(kw.span, "offset may not be set multiple times"));
        }
        *slot = Some(off);
        node.span.end = dspan.end;
        Ok(node)
    }

    fn at_modifier(&mut self, mut node: Node) -> PResult<Node> {
        let at_tok = self.bump();
        let at = match self.peek_kind().clone() {
            TokenKind::Number(n) => {
                self.bump();
                AtModifier::Timestamp(Number(n))
            }
            TokenKind::Sub => {
                self.bump();
                match self.peek_kind().clone() {
                    TokenKind::Number(n) => {
                        self.bump();
                        AtModifier::Timestamp(Number(-n))
                    }
                    _ => return Err(self.unexpected("timestamp after @")),
                }
            }
            TokenKind::Ident(s) if s == "start" || s == "end" => {
                self.bump();
                self.expect(TokenKind::LParen, "\"(\"")?;
                self.expect(TokenKind::RParen, "\")\"")?;
                if s == "start" {
                    AtModifier::Start
                } else {
                    AtModifier::End
                }
            }
            _ => return Err(self.unexpected("timestamp, start() or end() after @")),
        };
        if let AtModifier::Timestamp(Number(ts)) = at {
            if !ts.is_finite() {
                return Err(Diagnostic::error(at_tok.span, "timestamp out of bounds for @ modifier"));
            }
        }
        let slot = match &mut node.expr {
            Expr::Selector(sel) => &mut sel.at,
            Expr::Matrix { selector, .. } => &mut selector.at,
            Expr::Subquery(sq) => &mut sq.at,
            _ => {
                return Err(Diagnostic::error(
                    at_tok.span,
                    "@ modifier must be preceded by an instant vector selector or range vector selector or a subquery",
                ))
            }
        };
        if slot.is_some() {
            return Err(Diagnostic::error(at_tok.span, "@ <timestamp> may not be set multiple times"));
        }
        *slot = Some(at);
        node.span.end = self.prev_end();
        Ok(node)
    }

    fn primary(&mut self) -> PResult<Node> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Number(n) => {
                self.bump();
                Ok(Node {
                    expr: Expr::Number(Number(n)),
                    ty: ValueType::Scalar,
                    span: t.span,
                })
            }
            TokenKind::Str(s) => {
                self.bump();
                Ok(Node {
                    expr: Expr::String(s),
                    ty: ValueType::String,
                    span: t.span,
                })
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.expr(0)?;
                let close = self.expect(TokenKind::RParen, "\")\"")?;
                Ok(Node {
                    ty: inner.ty,
                    span: t.span.start..close.span.end,
                    expr: Expr::Paren(Box::new(inner.expr)),
                })
            }
            TokenKind::LBrace => self.selector(None, t.span.start),
            TokenKind::Ident(name) => self.ident_primary(name, t.span),
            _ => Err(self.unexpected("expression")),
        }
    }

    fn ident_primary(&mut self, name: String, span: Range<usize>) -> PResult<Node> {
        let lower = name.to_ascii_lowercase();
        if lower == "inf" || lower == "nan" {
            self.bump();
            let v = if lower == "inf" { f64::INFINITY } else { f64::NAN };
            return Ok(Node {
                expr: Expr::Number(Number(v)),
                ty: ValueType::Scalar,
                span,
            });
        }
        if let Some(op) = AggregateOp::from_name(&name) {
            let next = self.peek_kind_at(1);
            let next_kw = keyword(next);
            if *next == TokenKind::LParen || next_kw.as_deref() == Some("by") || next_kw.as_deref() == Some("without") {
                return self.aggregate(op, span);
            }
        }
        if *self.peek_kind_at(1) == TokenKind::LParen {
            return self.call(name, span);
        }
        if RESERVED.contains(&lower.as_str()) {
            return Err(Diagnostic::error(span, format!("unexpected keyword \"{name}\"")));
        }
        self.bump();
        if *self.peek_kind() == TokenKind::LBrace {
            self.selector(Some(name), span.start)
        } else {
            Ok(Node {
                expr: Expr::Selector(VectorSelector::named(name)),
                ty: ValueType::Vector,
                span,
            })
        }
    }

    fn selector(&mut self, name: Option<String>, start: usize) -> PResult<Node> {
        self.expect(TokenKind::LBrace, "\"{\"")?;
        let mut matchers = Vec::new();
        loop {
            if *self.peek_kind() == TokenKind::RBrace {
                break;
            }
            let label_tok = self.peek().clone();
            let label = match &label_tok.kind {
                TokenKind::Ident(l) if is_label_name(l) => l.clone(),
                _ => return Err(self.unexpected("label name")),
            };
            self.bump();
            let op_tok = self.peek().clone();
            let op = match op_tok.kind {
                TokenKind::Assign => MatchOp::Equal,
                TokenKind::Neq => MatchOp::NotEqual,
                TokenKind::ReMatch => MatchOp::RegexMatch,
                TokenKind::ReNoMatch => MatchOp::RegexNoMatch,
                _ => return Err(self.unexpected("label matching operator")),
            };
            self.bump();
            let val_tok = self.peek().clone();
            let value = match val_tok.kind {
                TokenKind::Str(s) => s,
                _ => return Err(self.unexpected("string label value")),
            };
            self.bump();
            if matches!(op, MatchOp::RegexMatch | MatchOp::RegexNoMatch) {
                if let Err(e) = compile_anchored(&value) {
                    let first = e.to_string();
                    let first = first.lines().last().unwrap_or("invalid regex").trim();
                    return Err(Diagnostic::error(
                        val_tok.span,
                        format!("invalid regular expression in label matcher: {first}"),
                    ));
                }
            }
            matchers.push(LabelMatcher { name: label, op, value });
            match self.peek_kind() {
                TokenKind::Comma => {
                    self.bump();
                }
                TokenKind::RBrace => {}
                _ => return Err(self.unexpected("\",\" or \"}\"")),
            }
        }
        let close = self.bump();
        let span = start..close.span.end;
        if name.is_some() && matchers.iter().any(|m| m.name == "__name__") {
            return Err(Diagnostic::error(span, "metric name must not be set twice"));
        }
        if name.is_none() && matchers.iter().all(matcher_matches_empty) {
            return Err(Diagnostic::error(
                span,
                "vector selector must contain at least one non-empty matcher",
            ));
        }
        Ok(Node {
            expr: Expr::Selector(VectorSelector {
                name,
                matchers,
                offset: None,
                at: None,
            }),
            ty: ValueType::Vector,
            span,
        })
    }

    fn label_list(&mut self) -> PResult<Vec<String>> {
        self.expect(TokenKind::LParen, "\"(\"")?;
        let mut labels = Vec::new();
        loop {
            match self.peek_kind().clone() {
                TokenKind::RParen => {
                    self.bump();
                    return Ok(labels);
                }
                TokenKind::Ident(l) if is_label_name(&l) => {
                    self.bump();
                    labels.push(l);
                    match self.peek_kind() {
                        TokenKind::Comma => {
                            self.bump();
                        }
                        TokenKind::RParen => {}
                        _ => return Err(self.unexpected("\",\" or \")\"")),
                    }
                }
                _ => return Err(self.unexpected("label name")),
            }
        }
    }

    fn grouping(&mut self) -> PResult<Option<Grouping>> {
        let kind = if self.peek_keyword("by") {
            GroupingKind::By
        } else if self.peek_keyword("without") {
            GroupingKind::Without
        } else {
            return Ok(None);
        };
        self.bump();
        let labels = self.label_list()?;
        Ok(Some(Grouping { kind, labels }))
    }

    fn aggregate(&mut self, op: AggregateOp, span: Range<usize>) -> PResult<Node> {
        self.bump();
        let mut grouping = self.grouping()?;
        self.expect(TokenKind::LParen, "\"(\"")?;
        let mut args = Vec::new();
        if *self.peek_kind() != TokenKind::RParen {
            loop {
                args.push(self.expr(0)?);
                if *self.peek_kind() == TokenKind::Comma {
                    self.bump();
                    continue;
                }
                break;
            }
        }
        let close = self.expect(TokenKind::RParen, "\")\"")?;
        let mut end = close.span.end;
        if let Some(g) = self.grouping()? {
            if grouping.is_some() {
                return Err(Diagnostic::error(
                    span.start..self.prev_end(),
                    "aggregation grouping specified twice",
                ));
            }
            grouping = Some(g);
            end = self.prev_end();
        }
        let full = span.start..end;
        let want = if op.takes_param() { 2 } else { 1 };
        if args.len() != want {
            return Err(Diagnostic::error(
                full,
                format!(
                    "wrong number of arguments for aggregate expression provided, expected {want}, got {}",
                    args.len()
                ),
            ));
        }
        let expr = args.pop().unwrap();
        let param = args.pop();
        if expr.ty != ValueType::Vector {
            return Err(Diagnostic::error(
                expr.span,
                format!("expected type instant vector in aggregation expression, got {}", expr.ty),
            ));
        }
        if let Some(p) = &param {
            let expected = if op == AggregateOp::CountValues {
                ValueType::String
            } else {
                ValueType::Scalar
            };
            if p.ty != expected {
                return Err(Diagnostic::error(
                    p.span.clone(),
                    format!("expected type {expected} in aggregation parameter, got {}", p.ty),
                ));
            }
        }
        Ok(Node {
            expr: Expr::Aggregate(AggregateExpr {
                op,
                param: param.map(|p| Box::new(p.expr)),
                expr: Box::new(expr.expr),
                grouping,
            }),
            ty: ValueType::Vector,
            span: full,
        })
    }

    fn call(&mut self, func: String, span: Range<usize>) -> PResult<Node> {
        self.bump();
        self.expect(TokenKind::LParen, "\"(\"")?;
        let mut args = Vec::new();
        if *self.peek_kind() != TokenKind::RParen {
            loop {
                args.push(self.expr(0)?);
                if *self.peek_kind() == TokenKind::Comma {
                    self.bump();
                    continue;
                }
                break;
            }
        }
        let close = self.expect(TokenKind::RParen, "\")\"")?;
        let full = span.start..close.span.end;
        let ty = match functions::lookup(&func) {
            Some(sig) => {
                let n = args.len();
                if n < sig.min_args() || sig.max_args().is_some_and(|m| n > m) {
                    let expected = match sig.max_args() {
                        Some(m) if m == sig.min_args() => m.to_string(),
                        Some(m) => format!("{} to {m}", sig.min_args()),
                        None => format!("at least {}", sig.min_args()),
                    };
                    return Err(Diagnostic::error(
                        full,
                        format!("expected {expected} argument(s) in call to \"{func}\", got {n}"),
                    ));
                }
                for (i, a) in args.iter().enumerate() {
                    let want = sig.arg_type(i).unwrap_or(ValueType::Vector);
                    if a.ty != want {
                        return Err(Diagnostic::error(
                            a.span.clone(),
                            format!("expected type {want} in call to function \"{func}\", got {}", a.ty),
                        ));
                    }
                }
                sig.returns
            }
            None => {
                self.warnings.push(
                    Diagnostic::warning(span.clone(), format!("unknown function \"{func}\"")).with_code(NONSTANDARD_FUNCTION),
                );
                ValueType::Vector
            }
        };
        Ok(Node {
            expr: Expr::Call {
                func,
                args: args.into_iter().map(|a| a.expr).collect(),
            },
            ty,
            span: full,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(q: &str) -> Expr {
        match parse_query(q) {
            Ok(p) => p.expr,
            Err(e) => panic!("{q}: {}", e.render(q)),
        }
    }

    fn err(q: &str) -> String {
        parse_query(q).expect_err(q).diagnostics[0].message.clone()
    }

    #[test]
    fn sum_rate_shape() {
        let e = ok("sum(rate(http_requests_total[5m]))");
        let Expr::Aggregate(a) = e else { panic!() };
        assert_eq!(a.op, AggregateOp::Sum);
        let Expr::Call { func, args } = *a.expr else { panic!() };
        assert_eq!(func, "rate");
        assert_eq!(
            args[0],
            Expr::Matrix {
                selector: VectorSelector::named("http_requests_total"),
                range: Duration::from_secs(300)
            }
        );
    }

    #[test]
    fn topk_param_and_regex_matcher() {
        let e = ok(r#"topk(3, node_memory_MemAvailable_bytes{node=~"node1|node3"})"#);
        let Expr::Aggregate(a) = e else { panic!() };
        assert_eq!(a.op, AggregateOp::Topk);
        assert_eq!(a.param.as_deref(), Some(&Expr::number(3.0)));
        let Expr::Selector(sel) = *a.expr else { panic!() };
        assert_eq!(
            sel.matchers,
            vec![LabelMatcher::new("node", MatchOp::RegexMatch, "node1|node3")]
        );
    }

    #[test]
    fn precedence() {
        assert_eq!(ok("1 + 2 * 3").to_string(), "1 + 2 * 3");
        let Expr::Binary(b) = ok("1 + 2 * 3") else { panic!() };
        assert_eq!(b.op, BinaryOp::Add);
        let Expr::Binary(b) = ok("2 ^ 3 ^ 2") else { panic!() };
        assert!(matches!(*b.rhs, Expr::Binary(ref r) if r.op == BinaryOp::Pow));
        let Expr::Unary { expr, .. } = ok("-2 ^ 2") else { panic!() };
        assert!(matches!(*expr, Expr::Binary(ref r) if r.op == BinaryOp::Pow));
        let Expr::Binary(b) = ok("a or b and c") else { panic!() };
        assert_eq!(b.op, BinaryOp::Or);
        let Expr::Binary(b) = ok("a > b + 1") else { panic!() };
        assert_eq!(b.op, BinaryOp::Gt);
        let Expr::Binary(b) = ok("-a * b") else { panic!() };
        assert_eq!(b.op, BinaryOp::Mul);
    }

    #[test]
    fn modifiers() {
        let Expr::Binary(b) = ok("a / on(pod) group_left(node) b") else {
            panic!()
        };
        let m = b.modifier.matching.unwrap();
        assert_eq!(m.kind, MatchingKind::On);
        assert_eq!(m.labels, vec!["pod"]);
        assert_eq!(m.group, Some((GroupSide::Left, vec!["node".to_string()])));
        ok("a > bool 1");
        ok("1 > bool 2");
        ok("x offset 5m");
        ok("x[5m] offset -1h @ 1609746000");
        ok("x @ start() offset 1m");
        ok("rate(x[5m])[30m:1m]");
        ok("max_over_time(deriv(rate(x[1m])[5m:1m])[10m:])");
        ok("sum without (instance) (x)");
        ok("sum(x) by (node)");
        ok(r#"count_values("version", build_info)"#);
        ok(r#"label_replace(up, "foo", "$1", "instance", "(.*):.*")"#);
        ok("time() - process_start_time_seconds");
        ok("SUM(x)");
        ok(r#"{__name__=~"node_.+"}"#);
        ok("x atan2 y");
    }

    #[test]
    fn errors() {
        assert_eq!(err(""), "empty query");
        assert!(err("sum(rate(http_requests_total[5m])").contains("expected"));
        assert!(err("rate(x)").contains("range vector"));
        assert!(err("sum(x[5m])").contains("instant vector"));
        assert!(err("1 > 2").contains("bool"));
        assert!(err("x[0s]").contains("greater than 0"));
        assert!(err("{}").contains("non-empty matcher"));
        assert!(err(r#"{a=""}"#).contains("non-empty matcher"));
        assert!(err(r#"x{a=~"("}"#).contains("regular expression"));
        assert!(err("topk(x)").contains("wrong number"));
        assert!(err("1 and 2").contains("set operator"));
        assert!(err("x + on(a) 1").contains("vector matching"));
        assert!(err("rate(x[5m])[5m]").contains("ranges only allowed"));
        assert!(err("x offset 1m offset 2m").contains("multiple"));
        assert!(err("5m").contains("unexpected"));
        assert!(err("x y").contains("unexpected"));
        assert!(err("sum by (a) (x) by (b)").contains("twice"));
        assert!(err(r#"x{__name__="y"}"#).contains("twice"));
        assert!(err("a + bool b").contains("bool"));
        assert!(err("a and on(x) group_left b").contains("set operations"));
    }

    #[test]
    fn unknown_function_is_warning() {
        let p = parse_query("foo_bar(x)").unwrap();
        assert!(p.has_nonstandard_function());
        assert!(!p.is_clean());
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let q = "(".repeat(10_000) + "x" + &")".repeat(10_000);
        assert!(err(&q).contains("nested too deeply"));
        let q = "-".repeat(10_000) + "x";
        assert!(parse_query(&q).is_err());
    }
}
