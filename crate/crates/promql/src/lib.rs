//! PromQL front end: lexer, parser with type checking, renderer, metric-name
//! extraction and a canonical form for equivalence checks.
//!
//! ```
//! let parsed = promql::parse_query("sum(rate(http_requests_total[5m]))").unwrap();
//! assert!(parsed.is_clean());
//! let names = promql::metric_names(&parsed.expr);
//! assert!(names.contains("http_requests_total"));
//! ```

pub mod ast;
pub mod canonical;
pub mod diagnostic;
pub mod functions;
pub mod lexer;
pub mod parser;

pub use ast::{Duration, Expr};
pub use canonical::{canonicalize, metric_names, queries_equivalent};
pub use diagnostic::{Diagnostic, Severity, NONSTANDARD_FUNCTION};
pub use functions::ValueType;
pub use parser::{parse_query, ParseError, Parsed};

/// Canonical text of a query, or the parse error.
pub fn canonical_text(query: &str) -> Result<String, ParseError> {
    parse_query(query).map(|p| canonicalize(&p.expr).to_string())
}
