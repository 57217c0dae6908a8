//! Tokenizer shared by the Turtle, N-Triples and SPARQL readers.
//!
//! The three syntaxes share IRI references, prefixed names, blank node
//! labels, string literals with language tags or datatypes, and the
//! punctuation that separates triples. Keywords are returned as bare words
//! and interpreted by each parser.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    IriRef(String),
    PrefixedName { prefix: String, local: String },
    BlankLabel(String),
    Var(String),
    Str(String),
    LangTag(String),
    /// `@prefix` / `@base`
    AtKeyword(String),
    DoubleCaret,
    Integer(String),
    Decimal(String),
    Double(String),
    Word(String),
    Punct(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::IriRef(s) => write!(f, "<{s}>"),
            Tok::PrefixedName { prefix, local } => write!(f, "{prefix}:{local}"),
            Tok::BlankLabel(s) => write!(f, "_:{s}"),
            Tok::Var(s) => write!(f, "?{s}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::LangTag(s) => write!(f, "@{s}"),
            Tok::AtKeyword(s) => write!(f, "@{s}"),
            Tok::DoubleCaret => f.write_str("^^"),
            Tok::Integer(s) | Tok::Decimal(s) | Tok::Double(s) | Tok::Word(s) => f.write_str(s),
            Tok::Punct(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LexError {
    pub pos: Pos,
    pub reason: String,
}

pub(crate) struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    lookahead: Vec<char>,
    line: usize,
    col: usize,
    /// SPARQL mode recognises `?var` / `$var`.
    variables: bool,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || (c as u32) > 0x7f
}

fn is_name_char(c: char) -> bool {
    is_name_start(c) || c.is_ascii_digit() || c == '-'
}

fn iri_char_ok(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`') || c < ' ')
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(input: &'a str, variables: bool) -> Self {
        Lexer {
            chars: input.chars().peekable(),
            lookahead: Vec::new(),
            line: 1,
            col: 1,
            variables,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&mut self) -> Option<char> {
        if let Some(&c) = self.lookahead.last() {
            return Some(c);
        }
        self.chars.peek().copied()
    }

    fn peek2(&mut self) -> Option<char> {
        if self.lookahead.is_empty() {
            let first = self.chars.next()?;
            let second = self.chars.peek().copied();
            self.lookahead.push(first);
            return second;
        }
        if self.lookahead.len() >= 2 {
            return Some(self.lookahead[self.lookahead.len() - 2]);
        }
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = match self.lookahead.pop() {
            Some(c) => Some(c),
            None => self.chars.next(),
        }?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, pos: Pos, reason: impl Into<String>) -> LexError {
        LexError {
            pos,
            reason: reason.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    pub(crate) fn tokenize(mut self) -> Result<Vec<Spanned>, LexError> {
        let mut out = Vec::new();
        while let Some(tok) = self.next_token()? {
            out.push(tok);
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<Spanned>, LexError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let tok = match c {
            '<' => self.iri_ref(pos)?,
            '"' | '\'' => self.string(pos)?,
            '@' => {
                self.bump();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        tag.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if tag.is_empty() {
                    return Err(self.err(pos, "empty language tag"));
                }
                if tag == "prefix" || tag == "base" {
                    Tok::AtKeyword(tag)
                } else {
                    Tok::LangTag(tag)
                }
            }
            '^' => {
                self.bump();
                if self.peek() != Some('^') {
                    return Err(self.err(pos, "expected '^^'"));
                }
                self.bump();
                Tok::DoubleCaret
            }
            '_' if self.peek2() == Some(':') => {
                self.bump();
                self.bump();
                let label = self.name_run(true);
                if label.is_empty() {
                    return Err(self.err(pos, "empty blank node label"));
                }
                Tok::BlankLabel(label)
            }
            '?' | '$' if self.variables => {
                self.bump();
                let name = self.name_run(false);
                if name.is_empty() {
                    return Err(self.err(pos, "empty variable name"));
                }
                Tok::Var(name)
            }
            c if c.is_ascii_digit() => self.number(pos)?,
            '+' | '-' if self.peek2().is_some_and(|d| d.is_ascii_digit()) => self.number(pos)?,
            '.' if self.peek2().is_some_and(|d| d.is_ascii_digit()) => self.number(pos)?,
            ':' => {
                self.bump();
                Tok::PrefixedName {
                    prefix: String::new(),
                    local: self.name_run(true),
                }
            }
            c if is_name_start(c) => {
                let word = self.name_run(false);
                if self.peek() == Some(':') {
                    self.bump();
                    Tok::PrefixedName {
                        prefix: word,
                        local: self.name_run(true),
                    }
                } else {
                    Tok::Word(word)
                }
            }
            '.' | ';' | ',' | '[' | ']' | '(' | ')' | '{' | '}' | '*' | '=' | '!' | '>' | '|' => {
                self.bump();
                Tok::Punct(c)
            }
            other => return Err(self.err(pos, format!("unexpected character {other:?}"))),
        };
        Ok(Some(Spanned { tok, pos }))
    }

    /// Reads a name. Local parts of prefixed names may contain `.` and `:`
    /// but never end in `.`.
    fn name_run(&mut self, local: bool) -> String {
        let mut s = String::new();
        loop {
            match self.peek() {
                Some(c) if is_name_char(c) => {
                    s.push(c);
                    self.bump();
                }
                Some(':') if local => {
                    s.push(':');
                    self.bump();
                }
                Some('.') if local => {
                    if self.peek2().is_some_and(|n| is_name_char(n) || n == ':') {
                        s.push('.');
                        self.bump();
                    } else {
                        break;
                    }
                }
                Some('%') if local => {
                    s.push('%');
                    self.bump();
                }
                Some('\\') if local => {
                    self.bump();
                    if let Some(c) = self.bump() {
                        s.push(c);
                    }
                }
                _ => break,
            }
        }
        s
    }

    fn iri_ref(&mut self, pos: Pos) -> Result<Tok, LexError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err(pos, "unterminated IRI")),
                Some('>') => break,
                Some('\\') => {
                    let c = self.unicode_escape(pos)?;
                    if !iri_char_ok(c) {
                        return Err(self.err(pos, format!("invalid character {c:?} in IRI")));
                    }
                    s.push(c);
                }
                Some(c) if iri_char_ok(c) => s.push(c),
                Some(c) => {
                    return Err(self.err(pos, format!("invalid character {c:?} in IRI")));
                }
            }
        }
        Ok(Tok::IriRef(s))
    }

    fn unicode_escape(&mut self, pos: Pos) -> Result<char, LexError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.err(pos, "invalid escape in IRI")),
        };
        self.hex_char(width, pos)
    }

    fn hex_char(&mut self, width: usize, pos: Pos) -> Result<char, LexError> {
        let mut code = 0u32;
        for _ in 0..width {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.err(pos, "invalid hex escape"))?;
            code = code * 16 + d;
        }
        char::from_u32(code).ok_or_else(|| self.err(pos, "escape is not a valid code point"))
    }

    fn string(&mut self, pos: Pos) -> Result<Tok, LexError> {
        let quote = self.bump().expect("peeked");
        let long = self.peek() == Some(quote) && self.peek2() == Some(quote);
        if long {
            self.bump();
            self.bump();
        }
        let mut s = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(self.err(pos, "unterminated string literal"));
            };
            match c {
                '\\' => {
                    let e = self
                        .bump()
                        .ok_or_else(|| self.err(pos, "unterminated escape"))?;
                    match e {
                        't' => s.push('\t'),
                        'b' => s.push('\u{8}'),
                        'n' => s.push('\n'),
                        'r' => s.push('\r'),
                        'f' => s.push('\u{c}'),
                        '"' => s.push('"'),
                        '\'' => s.push('\''),
                        '\\' => s.push('\\'),
                        'u' => s.push(self.hex_char(4, pos)?),
                        'U' => s.push(self.hex_char(8, pos)?),
                        other => {
                            return Err(self.err(pos, format!("unknown escape \\{other}")));
                        }
                    }
                }
                c if c == quote => {
                    if !long {
                        break;
                    }
                    if self.peek() == Some(quote) && self.peek2() == Some(quote) {
                        self.bump();
                        self.bump();
                        break;
                    }
                    s.push(c);
                }
                '\n' | '\r' if !long => {
                    return Err(self.err(pos, "newline in short string literal"));
                }
                c => s.push(c),
            }
        }
        Ok(Tok::Str(s))
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, LexError> {
        let mut s = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            s.push(c);
            self.bump();
        }
        let mut seen_dot = false;
        let mut seen_exp = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.bump();
            } else if c == '.' && !seen_dot && !seen_exp {
                // A trailing dot terminates the statement instead.
                if !self.peek2().is_some_and(|d| d.is_ascii_digit()) {
                    break;
                }
                seen_dot = true;
                s.push(c);
                self.bump();
            } else if (c == 'e' || c == 'E') && !seen_exp {
                seen_exp = true;
                s.push(c);
                self.bump();
                if let Some(sign @ ('+' | '-')) = self.peek() {
                    s.push(sign);
                    self.bump();
                }
                if !self.peek().is_some_and(|d| d.is_ascii_digit()) {
                    return Err(self.err(pos, "malformed exponent"));
                }
            } else {
                break;
            }
        }
        Ok(if seen_exp {
            Tok::Double(s)
        } else if seen_dot {
            Tok::Decimal(s)
        } else {
            Tok::Integer(s)
        })
    }
}
