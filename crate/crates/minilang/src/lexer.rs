//! Indentation-aware tokenizer.
//!
//! Blank lines and comment-only lines never open or close blocks. Comment-only
//! lines are buffered and emitted after the indentation of the next code line
//! has been resolved, so a comment sits in the block of the code that follows it.

use crate::error::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Str(String),
    FStr(Vec<RawFPart>),
    Int(i64),
    Float(f64),
    Op(&'static str),
    Comment(String),
    Newline,
    Indent,
    Dedent,
    Eof,
}

/// An f-string piece before its embedded expressions are parsed.
#[derive(Debug, Clone, PartialEq)]
pub enum RawFPart {
    Lit(String),
    Expr(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
}

const OPS: &[&str] = &["==", "!=", "=", "+", "-", "(", ")", "[", "]", ",", ":", "."];

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    Lexer::new(src).run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    depth: usize,
    indents: Vec<usize>,
    pending_comments: Vec<(usize, String)>,
    out: Vec<Token>,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            depth: 0,
            indents: Vec::new(),
            pending_comments: Vec::new(),
            out: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn push(&mut self, tok: Tok, line: usize) {
        self.out.push(Token { tok, line });
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError::new(self.line, msg))
    }

    fn run(mut self) -> Result<Vec<Token>, SyntaxError> {
        while self.pos < self.chars.len() {
            if !self.line_start()? {
                continue;
            }
            self.scan_line()?;
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, self.line);
        }
        self.flush_comments();
        self.push(Tok::Eof, self.line);
        Ok(self.out)
    }

    /// Handle indentation at the start of a physical line. Returns false when the
    /// line was blank or comment-only and has been consumed.
    fn line_start(&mut self) -> Result<bool, SyntaxError> {
        let mut width = 0;
        while let Some(c) = self.peek() {
            match c {
                ' ' | '\t' => {
                    width += 1;
                    self.pos += 1;
                }
                '\r' => self.pos += 1,
                _ => break,
            }
        }
        match self.peek() {
            None => return Ok(false),
            Some('\n') => {
                self.pos += 1;
                self.line += 1;
                return Ok(false);
            }
            Some('#') => {
                let text = self.read_comment();
                self.pending_comments.push((self.line, text));
                return Ok(false);
            }
            _ => {}
        }
        match self.indents.last().copied() {
            None => self.indents.push(width),
            Some(top) if width > top => {
                self.indents.push(width);
                self.push(Tok::Indent, self.line);
            }
            Some(top) if width < top => {
                while let Some(&t) = self.indents.last() {
                    if t <= width {
                        break;
                    }
                    if self.indents.len() == 1 {
                        return self.err("unindent below the block's base indentation");
                    }
                    self.indents.pop();
                    self.push(Tok::Dedent, self.line);
                }
                if self.indents.last() != Some(&width) {
                    return self.err("unindent does not match any outer indentation level");
                }
            }
            Some(_) => {}
        }
        self.flush_comments();
        Ok(true)
    }

    fn flush_comments(&mut self) {
        for (line, text) in std::mem::take(&mut self.pending_comments) {
            self.push(Tok::Comment(text), line);
            self.push(Tok::Newline, line);
        }
    }

    /// Consume `#...` up to (not including) the newline; returns text after `#`.
    fn read_comment(&mut self) -> String {
        self.pos += 1;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.pos += 1;
        }
        self.chars[start..self.pos]
            .iter()
            .collect::<String>()
            .trim_end()
            .to_string()
    }

    /// Tokenize one logical line (which may span physical lines inside brackets).
    fn scan_line(&mut self) -> Result<(), SyntaxError> {
        loop {
            let Some(c) = self.peek() else {
                self.push(Tok::Newline, self.line);
                return Ok(());
            };
            match c {
                ' ' | '\t' | '\r' => self.pos += 1,
                '#' => {
                    self.read_comment();
                }
                '\n' => {
                    self.pos += 1;
                    if self.depth == 0 {
                        self.push(Tok::Newline, self.line);
                        self.line += 1;
                        return Ok(());
                    }
                    self.line += 1;
                }
                '\\' => return self.err("line continuation with '\\' is not supported"),
                '\'' | '"' => self.string(String::new())?,
                c if c.is_ascii_digit() => self.number()?,
                '.' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => self.number()?,
                c if c == '_' || c.is_alphabetic() => {
                    let word = self.word();
                    if matches!(self.peek(), Some('\'' | '"')) && is_string_prefix(&word) {
                        self.string(word)?;
                    } else {
                        let line = self.line;
                        self.push(Tok::Name(word), line);
                    }
                }
                _ => self.operator()?,
            }
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == '_' || c.is_alphanumeric() {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn operator(&mut self) -> Result<(), SyntaxError> {
        let line = self.line;
        for op in OPS {
            let n = op.chars().count();
            let matches = op.chars().enumerate().all(|(i, ch)| self.peek_at(i) == Some(ch));
            if matches {
                // `+=`, `-=`, `==` vs `=`: reject augmented assignment explicitly
                if (*op == "+" || *op == "-") && self.peek_at(1) == Some('=') {
                    return self.err(format!("augmented assignment '{op}=' is not supported"));
                }
                self.pos += n;
                match *op {
                    "(" | "[" => self.depth += 1,
                    ")" | "]" => {
                        if self.depth == 0 {
                            return self.err(format!("unmatched '{op}'"));
                        }
                        self.depth -= 1;
                    }
                    _ => {}
                }
                self.push(Tok::Op(op), line);
                return Ok(());
            }
        }
        let c = self.peek().unwrap_or(' ');
        match c {
            '{' | '}' => self.err("dictionaries and sets are not supported"),
            ';' => self.err("multiple statements on one line are not supported"),
            _ => self.err(format!("unsupported operator '{c}'")),
        }
    }

    fn number(&mut self) -> Result<(), SyntaxError> {
        let line = self.line;
        let start = self.pos;
        let mut is_float = false;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some('.') && !self.peek_at(1).is_some_and(|c| c.is_alphabetic() || c == '_') {
            is_float = true;
            self.pos += 1;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                self.pos += digit_at;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        if self.peek().is_some_and(|c| c == '_' || c.is_alphanumeric()) {
            return self.err("invalid numeric literal");
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if is_float {
            let v: f64 = text
                .parse()
                .map_err(|_| SyntaxError::new(line, format!("invalid float literal '{text}'")))?;
            self.push(Tok::Float(v), line);
        } else {
            if text.len() > 1 && text.starts_with('0') && text.chars().any(|c| c != '0') {
                return self.err("leading zeros in integer literals are not permitted");
            }
            let v: i64 = text
                .parse()
                .map_err(|_| SyntaxError::new(line, format!("integer literal '{text}' is too large")))?;
            self.push(Tok::Int(v), line);
        }
        Ok(())
    }

    fn string(&mut self, prefix: String) -> Result<(), SyntaxError> {
        let line = self.line;
        let lower = prefix.to_ascii_lowercase();
        let raw = lower.contains('r');
        let fmt = lower.contains('f');
        let quote = self.peek().expect("caller checked quote");
        let triple = self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        let mut body = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(SyntaxError::new(line, "unterminated string literal"));
            };
            if c == quote {
                if !triple {
                    self.pos += 1;
                    break;
                }
                if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                    self.pos += 3;
                    break;
                }
            }
            if c == '\n' {
                if !triple {
                    return Err(SyntaxError::new(line, "unterminated string literal"));
                }
                self.line += 1;
            }
            body.push(c);
            self.pos += 1;
            if c == '\\' {
                if let Some(next) = self.peek() {
                    if next == '\n' {
                        self.line += 1;
                    }
                    body.push(next);
                    self.pos += 1;
                }
            }
        }
        if fmt {
            let parts = split_fstring(&body, raw).map_err(|m| SyntaxError::new(line, m))?;
            self.push(Tok::FStr(parts), line);
        } else {
            let value = if raw {
                body
            } else {
                decode_escapes(&body).map_err(|m| SyntaxError::new(line, m))?
            };
            self.push(Tok::Str(value), line);
        }
        Ok(())
    }
}

fn is_string_prefix(word: &str) -> bool {
    matches!(
        word.to_ascii_lowercase().as_str(),
        "r" | "f" | "rf" | "fr" | "u"
    )
}

/// Split f-string source into literal text and embedded expression source.
fn split_fstring(body: &str, raw: bool) -> Result<Vec<RawFPart>, String> {
    let chars: Vec<char> = body.chars().collect();
    let mut parts = Vec::new();
    let mut lit = String::new();
    let mut i = 0;
    let flush = |lit: &mut String, parts: &mut Vec<RawFPart>| -> Result<(), String> {
        if !lit.is_empty() {
            let text = if raw { lit.clone() } else { decode_escapes(lit)? };
            parts.push(RawFPart::Lit(text));
            lit.clear();
        }
        Ok(())
    };
    while i < chars.len() {
        let c = chars[i];
        match c {
            '{' if chars.get(i + 1) == Some(&'{') => {
                lit.push('{');
                i += 2;
            }
            '}' if chars.get(i + 1) == Some(&'}') => {
                lit.push('}');
                i += 2;
            }
            '}' => return Err("single '}' is not allowed in f-string".into()),
            '{' => {
                flush(&mut lit, &mut parts)?;
                let (expr, next) = scan_embedded(&chars, i + 1)?;
                if expr.trim().is_empty() {
                    return Err("f-string: empty expression not allowed".into());
                }
                parts.push(RawFPart::Expr(expr));
                i = next;
            }
            '\\' => {
                lit.push(c);
                if let Some(&n) = chars.get(i + 1) {
                    lit.push(n);
                }
                i += 2;
            }
            _ => {
                lit.push(c);
                i += 1;
            }
        }
    }
    flush(&mut lit, &mut parts)?;
    Ok(parts)
}

/// Scan an embedded expression starting after `{`; returns its source and the
/// index just past the closing `}`.
fn scan_embedded(chars: &[char], mut i: usize) -> Result<(String, usize), String> {
    let start = i;
    let mut depth = 0usize;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\'' | '"' => {
                i += 1;
                while i < chars.len() && chars[i] != c {
                    if chars[i] == '\\' {
                        i += 1;
                    }
                    i += 1;
                }
                if i >= chars.len() {
                    return Err("f-string: unterminated string in expression".into());
                }
            }
            '(' | '[' | '{' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            '}' if depth > 0 => depth -= 1,
            '}' => {
                let expr: String = chars[start..i].iter().collect();
                return Ok((expr, i + 1));
            }
            ':' if depth == 0 => return Err("f-string format specifications are not supported".into()),
            '!' if depth == 0 && chars.get(i + 1) != Some(&'=') => {
                return Err("f-string conversions are not supported".into())
            }
            _ => {}
        }
        i += 1;
    }
    Err("f-string: expecting '}'".into())
}

/// Decode backslash escapes of a non-raw string literal.
pub fn decode_escapes(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars().peekable();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        let Some(e) = it.next() else {
            out.push('\\');
            break;
        };
        match e {
            '\n' => {}
            '\\' => out.push('\\'),
            '\'' => out.push('\''),
            '"' => out.push('"'),
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            'a' => out.push('\u{07}'),
            'b' => out.push('\u{08}'),
            'f' => out.push('\u{0c}'),
            'v' => out.push('\u{0b}'),
            '0'..='7' => {
                let mut v = e.to_digit(8).unwrap();
                for _ in 0..2 {
                    match it.peek().and_then(|d| d.to_digit(8)) {
                        Some(d) => {
                            v = v * 8 + d;
                            it.next();
                        }
                        None => break,
                    }
                }
                out.push(char::from_u32(v).ok_or("invalid octal escape")?);
            }
            'x' | 'u' | 'U' => {
                let n = match e {
                    'x' => 2,
                    'u' => 4,
                    _ => 8,
                };
                let mut v = 0u32;
                for _ in 0..n {
                    let d = it
                        .next()
                        .and_then(|d| d.to_digit(16))
                        .ok_or_else(|| format!("truncated \\{e} escape"))?;
                    v = v * 16 + d;
                }
                out.push(char::from_u32(v).ok_or_else(|| format!("invalid \\{e} escape"))?);
            }
            other => {
                out.push('\\');
                out.push(other);
            }
        }
    }
    Ok(out)
}
