use std::fmt;
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Warning => f.write_str("warning"),
            Severity::Error => f.write_str("error"),
        }
    }
}

/// Code attached to calls of functions outside the known catalogue.
pub const NONSTANDARD_FUNCTION: &str = "nonstandard-function";

/// A message about a byte range of the query text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Range<usize>,
    pub message: String,
    pub severity: Severity,
    pub code: Option<&'static str>,
}

impl Diagnostic {
    pub fn error(span: Range<usize>, message: impl Into<String>) -> Self {
        Self {
            span,
            message: message.into(),
            severity: Severity::Error,
            code: None,
        }
    }

    pub fn warning(span: Range<usize>, message: impl Into<String>) -> Self {
        Self {
            span,
            message: message.into(),
            severity: Severity::Warning,
            code: None,
        }
    }

    pub fn with_code(mut self, code: &'static str) -> Self {
        self.code = Some(code);
        self
    }

    /// 1-based (line, column) of the span start, counting columns in chars.
    pub fn line_col(&self, input: &str) -> (usize, usize) {
        let start = self.span.start.min(input.len());
        let mut line = 1;
        let mut col = 1;
        for (i, c) in input.char_indices() {
            if i >= start {
                break;
            }
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    /// Renders as `line:col: severity: message`.
    pub fn render(&self, input: &str) -> String {
        let (line, col) = self.line_col(input);
        match self.code {
            Some(code) => format!("{line}:{col}: {}[{code}]: {}", self.severity, self.message),
            None => format!("{line}:{col}: {}: {}", self.severity, self.message),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at {}..{}: {}",
            self.severity, self.span.start, self.span.end, self.message
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_counts_newlines() {
        let d = Diagnostic::error(7..8, "x");
        assert_eq!(d.line_col("ab\ncde\nf"), (3, 1));
        assert_eq!(d.render("ab\ncde\nf"), "3:1: error: x");
    }

    #[test]
    fn span_past_end_is_clamped() {
        let d = Diagnostic::warning(40..40, "eof");
        assert_eq!(d.line_col("abc"), (1, 4));
    }
}
