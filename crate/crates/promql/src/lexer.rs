//! Tokenizer for PromQL text.
//!
//! Durations are recognised wherever a digit run is immediately followed by a
//! unit suffix (`5m`, `1h30m`, `250ms`); the parser decides whether a duration
//! is allowed at that position.

use std::ops::Range;

use crate::ast::Duration;
use crate::diagnostic::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Number(f64),
    Str(String),
    Duration(Duration),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    At,
    Assign,
    Eql,
    Neq,
    ReMatch,
    ReNoMatch,
    Lt,
    Lte,
    Gt,
    Gte,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier \"{s}\""),
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::Duration(d) => format!("duration {d}"),
            TokenKind::LParen => "\"(\"".into(),
            TokenKind::RParen => "\")\"".into(),
            TokenKind::LBrace => "\"{\"".into(),
            TokenKind::RBrace => "\"}\"".into(),
            TokenKind::LBracket => "\"[\"".into(),
            TokenKind::RBracket => "\"]\"".into(),
            TokenKind::Comma => "\",\"".into(),
            TokenKind::Colon => "\":\"".into(),
            TokenKind::At => "\"@\"".into(),
            TokenKind::Assign => "\"=\"".into(),
            TokenKind::Eql => "\"==\"".into(),
            TokenKind::Neq => "\"!=\"".into(),
            TokenKind::ReMatch => "\"=~\"".into(),
            TokenKind::ReNoMatch => "\"!~\"".into(),
            TokenKind::Lt => "\"<\"".into(),
            TokenKind::Lte => "\"<=\"".into(),
            TokenKind::Gt => "\">\"".into(),
            TokenKind::Gte => "\">=\"".into(),
            TokenKind::Add => "\"+\"".into(),
            TokenKind::Sub => "\"-\"".into(),
            TokenKind::Mul => "\"*\"".into(),
            TokenKind::Div => "\"/\"".into(),
            TokenKind::Mod => "\"%\"".into(),
            TokenKind::Pow => "\"^\"".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Range<usize>,
}

pub fn tokenize(input: &str) -> Result<Vec<Token>, Diagnostic> {
    Lexer {
        src: input,
        bytes: input.as_bytes(),
        pos: 0,
    }
    .run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b':'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b':'
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn run(mut self) -> Result<Vec<Token>, Diagnostic> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let start = self.pos;
            let Some(b) = self.peek() else {
                out.push(Token {
                    kind: TokenKind::Eof,
                    span: start..start,
                });
                return Ok(out);
            };
            let kind = match b {
                b'(' => self.single(TokenKind::LParen),
                b')' => self.single(TokenKind::RParen),
                b'{' => self.single(TokenKind::LBrace),
                b'}' => self.single(TokenKind::RBrace),
                b'[' => self.single(TokenKind::LBracket),
                b']' => self.single(TokenKind::RBracket),
                b',' => self.single(TokenKind::Comma),
                b'@' => self.single(TokenKind::At),
                b'+' => self.single(TokenKind::Add),
                b'-' => self.single(TokenKind::Sub),
                b'*' => self.single(TokenKind::Mul),
                b'/' => self.single(TokenKind::Div),
                b'%' => self.single(TokenKind::Mod),
                b'^' => self.single(TokenKind::Pow),
                b'=' => match self.peek_at(1) {
                    Some(b'=') => self.double(TokenKind::Eql),
                    Some(b'~') => self.double(TokenKind::ReMatch),
                    _ => self.single(TokenKind::Assign),
                },
                b'!' => match self.peek_at(1) {
                    Some(b'=') => self.double(TokenKind::Neq),
                    Some(b'~') => self.double(TokenKind::ReNoMatch),
                    _ => return Err(Diagnostic::error(start..start + 1, "unexpected character \"!\"")),
                },
                b'<' => match self.peek_at(1) {
                    Some(b'=') => self.double(TokenKind::Lte),
                    _ => self.single(TokenKind::Lt),
                },
                b'>' => match self.peek_at(1) {
                    Some(b'=') => self.double(TokenKind::Gte),
                    _ => self.single(TokenKind::Gt),
                },
                b'"' | b'\'' => self.quoted(b)?,
                b'`' => self.raw_string()?,
                b'0'..=b'9' => self.number_or_duration()?,
                b'.' if self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => self.number()?,
                b':' if self.in_subquery_colon(&out) => self.single(TokenKind::Colon),
                b if is_ident_start(b) => self.ident(),
                _ => {
                    let ch = self.src[start..].chars().next().unwrap_or('?');
                    let end = start + ch.len_utf8();
                    return Err(Diagnostic::error(start..end, format!("unexpected character {ch:?}")));
                }
            };
            out.push(Token {
                kind,
                span: start..self.pos,
            });
        }
    }

    // Inside `[d:d]` a colon directly after a duration separates range and step.
    fn in_subquery_colon(&self, out: &[Token]) -> bool {
        matches!(out.last().map(|t| &t.kind), Some(TokenKind::Duration(_)))
    }

    fn skip_trivia(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn single(&mut self, k: TokenKind) -> TokenKind {
        self.pos += 1;
        k
    }

    fn double(&mut self, k: TokenKind) -> TokenKind {
        self.pos += 2;
        k
    }

    fn ident(&mut self) -> TokenKind {
        let start = self.pos;
        while self.peek().is_some_and(is_ident_continue) {
            self.pos += 1;
        }
        TokenKind::Ident(self.src[start..self.pos].to_string())
    }

    fn quoted(&mut self, quote: u8) -> Result<TokenKind, Diagnostic> {
        let start = self.pos;
        self.pos += 1;
        let mut value = String::new();
        loop {
            let Some(b) = self.peek() else {
                return Err(Diagnostic::error(start..self.pos, "unterminated quoted string"));
            };
            if b == quote {
                self.pos += 1;
                return Ok(TokenKind::Str(value));
            }
            if b == b'\n' {
                return Err(Diagnostic::error(start..self.pos, "unterminated quoted string"));
            }
            if b == b'\\' {
                let esc_start = self.pos;
                self.pos += 1;
                let Some(e) = self.peek() else {
                    return Err(Diagnostic::error(start..self.pos, "unterminated quoted string"));
                };
                self.pos += 1;
                match e {
                    b'n' => value.push('\n'),
                    b't' => value.push('\t'),
                    b'r' => value.push('\r'),
                    b'a' => value.push('\u{7}'),
                    b'b' => value.push('\u{8}'),
                    b'f' => value.push('\u{c}'),
                    b'v' => value.push('\u{b}'),
                    b'\\' => value.push('\\'),
                    b'"' => value.push('"'),
                    b'\'' => value.push('\''),
                    b'x' => value.push(self.hex_escape(2, esc_start)?),
                    b'u' => value.push(self.hex_escape(4, esc_start)?),
                    b'U' => value.push(self.hex_escape(8, esc_start)?),
                    _ => return Err(Diagnostic::error(esc_start..self.pos, "unknown escape sequence in string")),
                }
                continue;
            }
            let ch = self.src[self.pos..].chars().next().unwrap_or('\u{fffd}');
            value.push(ch);
            self.pos += ch.len_utf8();
        }
    }

    fn hex_escape(&mut self, digits: usize, esc_start: usize) -> Result<char, Diagnostic> {
        let end = self.pos + digits;
        let text = self.src.get(self.pos..end).unwrap_or("");
        let code = (text.len() == digits && text.bytes().all(|b| b.is_ascii_hexdigit()))
            .then(|| u32::from_str_radix(text, 16).ok())
            .flatten()
            .and_then(char::from_u32);
        match code {
            Some(c) => {
                self.pos = end;
                Ok(c)
            }
            None => Err(Diagnostic::error(
                esc_start..end.min(self.src.len()),
                "invalid escape sequence in string",
            )),
        }
    }

    fn raw_string(&mut self) -> Result<TokenKind, Diagnostic> {
        let start = self.pos;
        self.pos += 1;
        let body_start = self.pos;
        while let Some(b) = self.peek() {
            if b == b'`' {
                let value = self.src[body_start..self.pos].to_string();
                self.pos += 1;
                return Ok(TokenKind::Str(value));
            }
            self.pos += 1;
        }
        Err(Diagnostic::error(start..self.pos, "unterminated raw string"))
    }

    fn number_or_duration(&mut self) -> Result<TokenKind, Diagnostic> {
        if let Some((dur, len)) = scan_duration(&self.bytes[self.pos..]) {
            let start = self.pos;
            self.pos += len;
            return dur
                .map(TokenKind::Duration)
                .ok_or_else(|| Diagnostic::error(start..self.pos, "invalid duration: units must be in descending order"));
        }
        self.number()
    }

    fn number(&mut self) -> Result<TokenKind, Diagnostic> {
        let start = self.pos;
        if self.peek() == Some(b'0') && matches!(self.peek_at(1), Some(b'x' | b'X')) {
            self.pos += 2;
            let digits = self.pos;
            while self.peek().is_some_and(|b| b.is_ascii_hexdigit()) {
                self.pos += 1;
            }
            let value = u64::from_str_radix(&self.src[digits..self.pos], 16)
                .map_err(|_| Diagnostic::error(start..self.pos, "invalid hexadecimal number"))?;
            self.reject_trailing_ident(start)?;
            return Ok(TokenKind::Number(value as f64));
        }
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|b| b.is_ascii_digit()) {
                while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        self.reject_trailing_ident(start)?;
        self.src[start..self.pos]
            .parse::<f64>()
            .map(TokenKind::Number)
            .map_err(|_| Diagnostic::error(start..self.pos, "invalid number"))
    }

    fn reject_trailing_ident(&mut self, start: usize) -> Result<(), Diagnostic> {
        if self.peek().is_some_and(is_ident_continue) {
            while self.peek().is_some_and(is_ident_continue) {
                self.pos += 1;
            }
            return Err(Diagnostic::error(
                start..self.pos,
                format!("bad number or duration syntax: {:?}", &self.src[start..self.pos]),
            ));
        }
        Ok(())
    }
}

const UNITS: [(&str, u64); 7] = [
    ("y", 365 * 24 * 3600 * 1000),
    ("w", 7 * 24 * 3600 * 1000),
    ("d", 24 * 3600 * 1000),
    ("h", 3600 * 1000),
    ("ms", 1),
    ("m", 60 * 1000),
    ("s", 1000),
];

fn unit_rank(unit: &str) -> usize {
    match unit {
        "y" => 0,
        "w" => 1,
        "d" => 2,
        "h" => 3,
        "m" => 4,
        "s" => 5,
        _ => 6,
    }
}

/// Scans `(\d+unit)+` not followed by an identifier character. Returns the
/// byte length consumed and the value, or `None` in the value slot when the
/// units are out of order.
fn scan_duration(bytes: &[u8]) -> Option<(Option<Duration>, usize)> {
    let mut pos = 0;
    let mut total: u64 = 0;
    let mut last_rank: Option<usize> = None;
    let mut ordered = true;
    let mut parts = 0;
    loop {
        let digits_start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == digits_start {
            break;
        }
        let rest = &bytes[pos..];
        let unit = UNITS.iter().find(|(u, _)| rest.starts_with(u.as_bytes())).copied();
        let Some((unit, mult)) = unit else {
            if parts == 0 {
                return None;
            }
            pos = digits_start;
            break;
        };
        let n: u64 = std::str::from_utf8(&bytes[digits_start..pos]).ok()?.parse().ok()?;
        pos += unit.len();
        parts += 1;
        let rank = unit_rank(unit);
        if last_rank.is_some_and(|r| r >= rank) {
            ordered = false;
        }
        last_rank = Some(rank);
        total = total.checked_add(n.checked_mul(mult)?)?;
    }
    if parts == 0 {
        return None;
    }
    if pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
        return None;
    }
    Some((ordered.then_some(Duration::from_millis(total)), pos))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize(s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn durations_and_numbers() {
        assert_eq!(
            kinds("5m 1h30m 250ms 1.5 0x1f 1e3"),
            vec![
                TokenKind::Duration(Duration::from_secs(300)),
                TokenKind::Duration(Duration::from_secs(5400)),
                TokenKind::Duration(Duration::from_millis(250)),
                TokenKind::Number(1.5),
                TokenKind::Number(31.0),
                TokenKind::Number(1000.0),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn out_of_order_units_rejected() {
        assert!(tokenize("30m1h").is_err());
    }

    #[test]
    fn number_followed_by_ident_rejected() {
        assert!(tokenize("5xyz").is_err());
    }

    #[test]
    fn strings_unescape() {
        assert_eq!(
            kinds(r#""a\"b" 'c\n' `d\e`"#),
            vec![
                TokenKind::Str("a\"b".into()),
                TokenKind::Str("c\n".into()),
                TokenKind::Str("d\\e".into()),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn subquery_colon_after_duration() {
        assert_eq!(
            kinds("x[5m:1m]"),
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::LBracket,
                TokenKind::Duration(Duration::from_secs(300)),
                TokenKind::Colon,
                TokenKind::Duration(Duration::from_secs(60)),
                TokenKind::RBracket,
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn colons_in_metric_names() {
        assert_eq!(
            kinds("job:rate5m:sum"),
            vec![TokenKind::Ident("job:rate5m:sum".into()), TokenKind::Eof]
        );
    }

    #[test]
    fn comments_skipped() {
        assert_eq!(kinds("# hi\nup"), vec![TokenKind::Ident("up".into()), TokenKind::Eof]);
    }

    #[test]
    fn unicode_char_error_span_is_char_boundary() {
        let err = tokenize("up ≥ 1").unwrap_err();
        assert_eq!(err.span, 3..6);
    }
}
