//! Query tree types and their PromQL text rendering.

use std::fmt;

/// A non-negative time span with millisecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Duration(u64);

impl Duration {
    pub const fn from_millis(ms: u64) -> Self {
        Self(ms)
    }

    pub const fn from_secs(s: u64) -> Self {
        Self(s * 1000)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Duration {
    /// Compound rendering from the largest unit down, e.g. `1h30m`, `90s` as `1m30s`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return f.write_str("0s");
        }
        const PARTS: [(&str, u64); 7] = [
            ("y", 365 * 24 * 3600 * 1000),
            ("w", 7 * 24 * 3600 * 1000),
            ("d", 24 * 3600 * 1000),
            ("h", 3600 * 1000),
            ("m", 60 * 1000),
            ("s", 1000),
            ("ms", 1),
        ];
        let mut rest = self.0;
        for (unit, size) in PARTS {
            if rest >= size {
                write!(f, "{}{unit}", rest / size)?;
                rest %= size;
            }
        }
        Ok(())
    }
}

/// Float literal whose equality treats all NaNs as equal.
#[derive(Debug, Clone, Copy)]
pub struct Number(pub f64);

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 || (self.0.is_nan() && other.0.is_nan())
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        if v.is_nan() {
            f.write_str("NaN")
        } else if v.is_infinite() {
            f.write_str(if v > 0.0 { "Inf" } else { "-Inf" })
        } else if v != 0.0 && (v.abs() >= 1e15 || v.abs() < 1e-4) {
            write!(f, "{v:e}")
        } else {
            write!(f, "{v}")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatchOp {
    Equal,
    NotEqual,
    RegexMatch,
    RegexNoMatch,
}

impl MatchOp {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchOp::Equal => "=",
            MatchOp::NotEqual => "!=",
            MatchOp::RegexMatch => "=~",
            MatchOp::RegexNoMatch => "!~",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelMatcher {
    pub name: String,
    pub op: MatchOp,
    pub value: String,
}

impl LabelMatcher {
    pub fn new(name: impl Into<String>, op: MatchOp, value: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            op,
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtModifier {
    /// Unix timestamp in seconds.
    Timestamp(Number),
    Start,
    End,
}

/// Signed offset in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Offset {
    pub negative: bool,
    pub duration: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorSelector {
    pub name: Option<String>,
    pub matchers: Vec<LabelMatcher>,
    pub offset: Option<Offset>,
    pub at: Option<AtModifier>,
}

impl VectorSelector {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: Some(name.into()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubqueryExpr {
    pub expr: Box<Expr>,
    pub range: Duration,
    pub step: Option<Duration>,
    pub offset: Option<Offset>,
    pub at: Option<AtModifier>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    Atan2,
    Eql,
    Neq,
    Lt,
    Lte,
    Gt,
    Gte,
    And,
    Or,
    Unless,
}

impl BinaryOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Pow => "^",
            BinaryOp::Atan2 => "atan2",
            BinaryOp::Eql => "==",
            BinaryOp::Neq => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Lte => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Gte => ">=",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
            BinaryOp::Unless => "unless",
        }
    }

    /// Binding strength, higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And | BinaryOp::Unless => 2,
            BinaryOp::Eql | BinaryOp::Neq | BinaryOp::Lt | BinaryOp::Lte | BinaryOp::Gt | BinaryOp::Gte => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod | BinaryOp::Atan2 => 5,
            BinaryOp::Pow => 6,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        self == BinaryOp::Pow
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }

    pub fn is_set_op(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or | BinaryOp::Unless)
    }
}

pub(crate) const POW_PRECEDENCE: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchingKind {
    On,
    Ignoring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupSide {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorMatching {
    pub kind: MatchingKind,
    pub labels: Vec<String>,
    pub group: Option<(GroupSide, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BinModifier {
    pub return_bool: bool,
    pub matching: Option<VectorMatching>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryExpr {
    pub op: BinaryOp,
    pub lhs: Box<Expr>,
    pub rhs: Box<Expr>,
    pub modifier: BinModifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregateOp {
    Sum,
    Min,
    Max,
    Avg,
    Group,
    Count,
    Stddev,
    Stdvar,
    Topk,
    Bottomk,
    Quantile,
    CountValues,
}

impl AggregateOp {
    pub const ALL: [AggregateOp; 12] = [
        AggregateOp::Sum,
        AggregateOp::Min,
        AggregateOp::Max,
        AggregateOp::Avg,
        AggregateOp::Group,
        AggregateOp::Count,
        AggregateOp::Stddev,
        AggregateOp::Stdvar,
        AggregateOp::Topk,
        AggregateOp::Bottomk,
        AggregateOp::Quantile,
        AggregateOp::CountValues,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregateOp::Sum => "sum",
            AggregateOp::Min => "min",
            AggregateOp::Max => "max",
            AggregateOp::Avg => "avg",
            AggregateOp::Group => "group",
            AggregateOp::Count => "count",
            AggregateOp::Stddev => "stddev",
            AggregateOp::Stdvar => "stdvar",
            AggregateOp::Topk => "topk",
            AggregateOp::Bottomk => "bottomk",
            AggregateOp::Quantile => "quantile",
            AggregateOp::CountValues => "count_values",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let lower = name.to_ascii_lowercase();
        Self::ALL.into_iter().find(|op| op.as_str() == lower)
    }

    pub fn takes_param(self) -> bool {
        matches!(
            self,
            AggregateOp::Topk | AggregateOp::Bottomk | AggregateOp::Quantile | AggregateOp::CountValues
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupingKind {
    By,
    Without,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    pub kind: GroupingKind,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateExpr {
    pub op: AggregateOp,
    pub param: Option<Box<Expr>>,
    pub expr: Box<Expr>,
    pub grouping: Option<Grouping>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(Number),
    String(String),
    Selector(VectorSelector),
    Matrix { selector: VectorSelector, range: Duration },
    Subquery(SubqueryExpr),
    Paren(Box<Expr>),
    Unary { op: UnaryOp, expr: Box<Expr> },
    Binary(BinaryExpr),
    Aggregate(AggregateExpr),
    Call { func: String, args: Vec<Expr> },
}

impl Expr {
    pub fn number(v: f64) -> Self {
        Expr::Number(Number(v))
    }

    fn is_postfix_operand(&self) -> bool {
        !matches!(self, Expr::Binary(_) | Expr::Unary { .. })
    }
}

fn write_labels(f: &mut fmt::Formatter<'_>, labels: &[String]) -> fmt::Result {
    f.write_str("(")?;
    for (i, l) in labels.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        f.write_str(l)?;
    }
    f.write_str(")")
}

pub(crate) fn write_string_literal(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '\\' => f.write_str("\\\\")?,
            '"' => f.write_str("\\\"")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c if (c as u32) < 0x20 || c as u32 == 0x7f => write!(f, "\\x{:02x}", c as u32)?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

fn write_modifiers(f: &mut fmt::Formatter<'_>, offset: &Option<Offset>, at: &Option<AtModifier>) -> fmt::Result {
    if let Some(off) = offset {
        let sign = if off.negative { "-" } else { "" };
        write!(f, " offset {sign}{}", off.duration)?;
    }
    match at {
        Some(AtModifier::Timestamp(ts)) => write!(f, " @ {ts}")?,
        Some(AtModifier::Start) => f.write_str(" @ start()")?,
        Some(AtModifier::End) => f.write_str(" @ end()")?,
        None => {}
    }
    Ok(())
}

fn write_selector_body(f: &mut fmt::Formatter<'_>, sel: &VectorSelector) -> fmt::Result {
    if let Some(name) = &sel.name {
        f.write_str(name)?;
    }
    if !sel.matchers.is_empty() || sel.name.is_none() {
        f.write_str("{")?;
        for (i, m) in sel.matchers.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}{}", m.name, m.op.as_str())?;
            write_string_literal(f, &m.value)?;
        }
        f.write_str("}")?;
    }
    Ok(())
}

impl fmt::Display for VectorSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_selector_body(f, self)?;
        write_modifiers(f, &self.offset, &self.at)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(n) => write!(f, "{n}"),
            Expr::String(s) => write_string_literal(f, s),
            Expr::Selector(sel) => write!(f, "{sel}"),
            Expr::Matrix { selector, range } => {
                write_selector_body(f, selector)?;
                write!(f, "[{range}]")?;
                write_modifiers(f, &selector.offset, &selector.at)
            }
            Expr::Subquery(sq) => {
                if sq.expr.is_postfix_operand() {
                    write!(f, "{}", sq.expr)?;
                } else {
                    write!(f, "({})", sq.expr)?;
                }
                match sq.step {
                    Some(step) => write!(f, "[{}:{step}]", sq.range)?,
                    None => write!(f, "[{}:]", sq.range)?,
                }
                write_modifiers(f, &sq.offset, &sq.at)
            }
            Expr::Paren(inner) => write!(f, "({inner})"),
            Expr::Unary { op, expr } => {
                let sign = match op {
                    UnaryOp::Neg => "-",
                    UnaryOp::Pos => "+",
                };
                let wrap = matches!(&**expr, Expr::Binary(b) if b.op.precedence() < POW_PRECEDENCE);
                if wrap {
                    write!(f, "{sign}({expr})")
                } else {
                    write!(f, "{sign}{expr}")
                }
            }
            Expr::Binary(b) => {
                let prec = b.op.precedence();
                let lhs_wrap = match &*b.lhs {
                    Expr::Binary(l) => l.op.precedence() < prec || (l.op.precedence() == prec && b.op.is_right_assoc()),
                    Expr::Unary { .. } => b.op == BinaryOp::Pow,
                    _ => false,
                };
                let rhs_wrap = match &*b.rhs {
                    Expr::Binary(r) => r.op.precedence() < prec || (r.op.precedence() == prec && !b.op.is_right_assoc()),
                    _ => false,
                };
                if lhs_wrap {
                    write!(f, "({})", b.lhs)?;
                } else {
                    write!(f, "{}", b.lhs)?;
                }
                write!(f, " {}", b.op.as_str())?;
                if b.modifier.return_bool {
                    f.write_str(" bool")?;
                }
                if let Some(m) = &b.modifier.matching {
                    f.write_str(match m.kind {
                        MatchingKind::On => " on",
                        MatchingKind::Ignoring => " ignoring",
                    })?;
                    f.write_str(" ")?;
                    write_labels(f, &m.labels)?;
                    if let Some((side, labels)) = &m.group {
                        f.write_str(match side {
                            GroupSide::Left => " group_left",
                            GroupSide::Right => " group_right",
                        })?;
                        if !labels.is_empty() {
                            f.write_str(" ")?;
                            write_labels(f, labels)?;
                        }
                    }
                }
                if rhs_wrap {
                    write!(f, " ({})", b.rhs)
                } else {
                    write!(f, " {}", b.rhs)
                }
            }
            Expr::Aggregate(a) => {
                f.write_str(a.op.as_str())?;
                if let Some(g) = &a.grouping {
                    f.write_str(match g.kind {
                        GroupingKind::By => " by ",
                        GroupingKind::Without => " without ",
                    })?;
                    write_labels(f, &g.labels)?;
                    f.write_str(" ")?;
                }
                f.write_str("(")?;
                if let Some(p) = &a.param {
                    write!(f, "{p}, ")?;
                }
                write!(f, "{})", a.expr)
            }
            Expr::Call { func, args } => {
                write!(f, "{func}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_rendering() {
        assert_eq!(Duration::from_secs(300).to_string(), "5m");
        assert_eq!(Duration::from_secs(90).to_string(), "1m30s");
        assert_eq!(Duration::from_millis(1500).to_string(), "1s500ms");
        assert_eq!(Duration::from_secs(0).to_string(), "0s");
        assert_eq!(Duration::from_secs(86400 * 8).to_string(), "1w1d");
    }

    #[test]
    fn number_rendering() {
        assert_eq!(Number(5.0).to_string(), "5");
        assert_eq!(Number(0.25).to_string(), "0.25");
        assert_eq!(Number(f64::INFINITY).to_string(), "Inf");
        assert_eq!(Number(1e300).to_string(), "1e300");
        assert_eq!(Number(f64::NAN), Number(f64::NAN));
    }

    #[test]
    fn string_escapes() {
        let mut s = String::new();
        write_string_literal(&mut s, "a\"b\\c\n").unwrap();
        assert_eq!(s, r#""a\"b\\c\n""#);
    }
}
