use std::fmt;

use thiserror::Error;

use super::Span;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    pub fn at(span: Span, message: impl Into<String>) -> Self {
        ParseError { line: span.line, col: span.col, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Int(u64),
    Word(String),
    /// `'a`, used when reading type variables back from cache files.
    TyVar(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Int(n) => write!(f, "`{n}`"),
            Token::Word(w) => write!(f, "`{w}`"),
            Token::TyVar(v) => write!(f, "`'{v}`"),
            Token::Sym(s) => write!(f, "`{s}`"),
            Token::Eof => f.write_str("end of input"),
        }
    }
}

// Longest symbols first.
const SYMBOLS: &[&str] = &[
    "->", ":=", "<=", ">=", "(", ")", ":", "=", "+", "-", "*", ";", ",", "[", "]", "{", "}",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Token, Span)>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < bytes.len() {
        let c = bytes[i] as char;
        let span = Span { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            let n = text.parse().map_err(|_| ParseError::at(span, format!("integer literal `{text}` out of range")))?;
            col += (i - start) as u32;
            out.push((Token::Int(n), span));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' || c == '\'' {
            let start = i;
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            col += (i - start) as u32;
            let tok = if c == '\'' {
                if i == start + 1 {
                    return Err(ParseError::at(span, "expected a type variable name after `'`"));
                }
                Token::TyVar(src[start + 1..i].to_string())
            } else {
                Token::Word(src[start..i].to_string())
            };
            out.push((tok, span));
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len() as u32;
                out.push((Token::Sym(s), span));
            }
            None => return Err(ParseError::at(span, format!("unexpected character `{c}`"))),
        }
    }
    out.push((Token::Eof, Span { line, col }));
    Ok(out)
}

/// Token cursor with single-token lookahead and backtracking by position.
pub(crate) struct Cursor {
    toks: Vec<(Token, Span)>,
    pub(crate) pos: usize,
    keywords: &'static [&'static str],
}

impl Cursor {
    pub(crate) fn new(src: &str, keywords: &'static [&'static str]) -> Result<Self, ParseError> {
        Ok(Cursor { toks: tokenize(src)?, pos: 0, keywords })
    }

    pub(crate) fn peek(&self) -> &Token {
        &self.toks[self.pos].0
    }

    pub(crate) fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Token::Sym(t) if *t == s)
    }

    pub(crate) fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Token::Word(w) if w == kw)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub(crate) fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub(crate) fn is_ident(&self) -> bool {
        matches!(self.peek(), Token::Word(w) if !self.keywords.contains(&w.as_str()))
    }

    pub(crate) fn expect_ident(&mut self) -> Result<String, ParseError> {
        if self.is_ident() {
            match self.bump() {
                Token::Word(w) => Ok(w),
                _ => unreachable!(),
            }
        } else {
            Err(self.unexpected("an identifier"))
        }
    }

    pub(crate) fn expect_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Token::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    pub(crate) fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::at(self.span(), format!("expected {expected}, found {}", self.peek()))
    }
}
