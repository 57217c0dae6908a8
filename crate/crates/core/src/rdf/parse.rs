//! Turtle and N-Triples readers.
//!
//! Turtle support covers prefix and base declarations, the `a` keyword,
//! predicate and object lists, anonymous blank nodes with property lists,
//! and numeric/boolean shorthand literals. Collections are rejected.

use super::term::{Term, Triple, RDF_TYPE, XSD};
use crate::lex::{LexError, Lexer, Pos, Spanned, Tok};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Syntax {
    NTriples,
    Turtle,
}

impl Syntax {
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "nt" => Some(Syntax::NTriples),
            "ttl" => Some(Syntax::Turtle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxError {
    pub line: usize,
    pub reason: String,
}

impl From<LexError> for SyntaxError {
    fn from(e: LexError) -> Self {
        SyntaxError {
            line: e.pos.line,
            reason: e.reason,
        }
    }
}

/// Parses a document. Blank node labels are skolemized with `scope` as a
/// prefix, so labels from different files never collide.
pub fn parse_document(text: &str, syntax: Syntax, scope: &str) -> Result<Vec<Triple>, SyntaxError> {
    let tokens = Lexer::new(text, false).tokenize()?;
    let mut p = Parser {
        tokens,
        i: 0,
        syntax,
        prefixes: HashMap::new(),
        base: None,
        scope: scope.to_string(),
        anon: 0,
        out: Vec::new(),
    };
    p.document()?;
    Ok(p.out)
}

struct Parser {
    tokens: Vec<Spanned>,
    i: usize,
    syntax: Syntax,
    prefixes: HashMap<String, String>,
    base: Option<String>,
    scope: String,
    anon: usize,
    out: Vec<Triple>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.i).map(|s| &s.tok)
    }

    fn pos(&self) -> Pos {
        self.tokens
            .get(self.i)
            .or_else(|| self.tokens.last())
            .map(|s| s.pos)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.i).map(|s| s.tok.clone());
        self.i += 1;
        t
    }

    fn fail<T>(&self, reason: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            line: self.pos().line,
            reason: reason.into(),
        })
    }

    fn expect_punct(&mut self, c: char) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.i += 1;
                Ok(())
            }
            Some(t) => {
                let t = t.to_string();
                self.fail(format!("expected '{c}', found {t}"))
            }
            None => self.fail(format!("expected '{c}', found end of input")),
        }
    }

    fn turtle_only(&self, what: &str) -> Result<(), SyntaxError> {
        if self.syntax == Syntax::NTriples {
            return self.fail(format!("{what} is not allowed in N-Triples"));
        }
        Ok(())
    }

    fn document(&mut self) -> Result<(), SyntaxError> {
        while let Some(tok) = self.peek().cloned() {
            match tok {
                Tok::AtKeyword(k) => {
                    self.turtle_only("a directive")?;
                    self.i += 1;
                    self.directive(&k)?;
                    self.expect_punct('.')?;
                }
                Tok::Word(w) if w.eq_ignore_ascii_case("prefix") || w.eq_ignore_ascii_case("base") => {
                    self.turtle_only("a directive")?;
                    self.i += 1;
                    self.directive(&w.to_ascii_lowercase())?;
                }
                _ => {
                    let line = self.pos().line;
                    self.triples()?;
                    self.expect_punct('.')?;
                    if self.syntax == Syntax::NTriples
                        && self.tokens.get(self.i - 1).is_some_and(|t| t.pos.line != line)
                    {
                        return self.fail("an N-Triples statement must fit on one line");
                    }
                }
            }
        }
        Ok(())
    }

    fn directive(&mut self, keyword: &str) -> Result<(), SyntaxError> {
        if keyword == "prefix" {
            let prefix = match self.next() {
                Some(Tok::PrefixedName { prefix, local }) if local.is_empty() => prefix,
                _ => return self.fail("expected prefix name ending in ':'"),
            };
            let iri = match self.next() {
                Some(Tok::IriRef(iri)) => self.resolve(iri),
                _ => return self.fail("expected IRI in prefix declaration"),
            };
            self.prefixes.insert(prefix, iri);
        } else {
            match self.next() {
                Some(Tok::IriRef(iri)) => self.base = Some(self.resolve(iri)),
                _ => return self.fail("expected IRI in base declaration"),
            }
        }
        Ok(())
    }

    fn resolve(&self, iri: String) -> String {
        match &self.base {
            Some(base) if !iri.contains(':') => {
                if iri.is_empty() {
                    base.clone()
                } else if iri.starts_with('#') {
                    let doc = base.split('#').next().unwrap_or(base);
                    format!("{doc}{iri}")
                } else {
                    let doc = base.split('#').next().unwrap_or(base);
                    let cut = doc.rfind('/').map(|i| i + 1).unwrap_or(doc.len());
                    format!("{}{iri}", &doc[..cut])
                }
            }
            _ => iri,
        }
    }

    fn make_iri(&self, iri: String) -> Result<Term, SyntaxError> {
        match Term::try_iri(iri) {
            Ok(t) => Ok(t),
            Err(e) => self.fail(e.to_string()),
        }
    }

    fn fresh_blank(&mut self) -> Term {
        self.anon += 1;
        Term::blank(format!("{}.anon{}", self.scope, self.anon))
    }

    fn iri(&mut self) -> Result<Option<Term>, SyntaxError> {
        match self.peek().cloned() {
            Some(Tok::IriRef(iri)) => {
                self.i += 1;
                let iri = self.resolve(iri);
                self.make_iri(iri).map(Some)
            }
            Some(Tok::PrefixedName { prefix, local }) => {
                self.turtle_only("a prefixed name")?;
                self.i += 1;
                match self.prefixes.get(&prefix) {
                    Some(ns) => {
                        let iri = format!("{ns}{local}");
                        self.make_iri(iri).map(Some)
                    }
                    None => self.fail(format!("undeclared prefix '{prefix}:'")),
                }
            }
            _ => Ok(None),
        }
    }

    fn subject(&mut self) -> Result<(Term, bool), SyntaxError> {
        if let Some(t) = self.iri()? {
            return Ok((t, false));
        }
        match self.next() {
            Some(Tok::BlankLabel(l)) => Ok((Term::blank(format!("{}.{l}", self.scope)), false)),
            Some(Tok::Punct('[')) => {
                self.turtle_only("an anonymous blank node")?;
                let b = self.fresh_blank();
                if !matches!(self.peek(), Some(Tok::Punct(']'))) {
                    self.predicate_object_list(&b)?;
                }
                self.expect_punct(']')?;
                Ok((b, true))
            }
            Some(Tok::Punct('(')) => self.fail("RDF collections are not supported"),
            Some(t) => self.fail(format!("unexpected {t} in subject position")),
            None => self.fail("unexpected end of input"),
        }
    }

    fn triples(&mut self) -> Result<(), SyntaxError> {
        let (subject, bracketed) = self.subject()?;
        // `[ :p :o ] .` is a complete statement on its own.
        if bracketed && matches!(self.peek(), Some(Tok::Punct('.'))) {
            return Ok(());
        }
        self.predicate_object_list(&subject)
    }

    fn verb(&mut self) -> Result<Term, SyntaxError> {
        if let Some(Tok::Word(w)) = self.peek() {
            if w == "a" {
                self.turtle_only("the 'a' keyword")?;
                self.i += 1;
                return Ok(Term::iri(RDF_TYPE));
            }
        }
        match self.iri()? {
            Some(t) => Ok(t),
            None => self.fail("expected predicate IRI"),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), SyntaxError> {
        loop {
            let predicate = self.verb()?;
            loop {
                let object = self.object()?;
                self.out
                    .push(Triple::new(subject.clone(), predicate.clone(), object));
                if matches!(self.peek(), Some(Tok::Punct(','))) {
                    self.turtle_only("an object list")?;
                    self.i += 1;
                } else {
                    break;
                }
            }
            if !matches!(self.peek(), Some(Tok::Punct(';'))) {
                return Ok(());
            }
            self.turtle_only("a predicate list")?;
            while matches!(self.peek(), Some(Tok::Punct(';'))) {
                self.i += 1;
            }
            if matches!(self.peek(), Some(Tok::Punct('.') | Tok::Punct(']')) | None) {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Term, SyntaxError> {
        if let Some(t) = self.iri()? {
            return Ok(t);
        }
        let numeric = |this: &Self, lexical: String, ty: &str| -> Result<Term, SyntaxError> {
            this.turtle_only("a numeric shorthand literal")?;
            Ok(Term::typed_literal(lexical, format!("{XSD}{ty}")))
        };
        match self.next() {
            Some(Tok::BlankLabel(l)) => Ok(Term::blank(format!("{}.{l}", self.scope))),
            Some(Tok::Punct('[')) => {
                self.turtle_only("an anonymous blank node")?;
                let b = self.fresh_blank();
                if !matches!(self.peek(), Some(Tok::Punct(']'))) {
                    self.predicate_object_list(&b)?;
                }
                self.expect_punct(']')?;
                Ok(b)
            }
            Some(Tok::Punct('(')) => self.fail("RDF collections are not supported"),
            Some(Tok::Str(s)) => match self.peek().cloned() {
                Some(Tok::LangTag(lang)) => {
                    self.i += 1;
                    Ok(Term::lang_literal(s, lang))
                }
                Some(Tok::DoubleCaret) => {
                    self.i += 1;
                    match self.iri()? {
                        Some(dt) => Ok(Term::typed_literal(s, dt.value())),
                        None => self.fail("expected datatype IRI after '^^'"),
                    }
                }
                _ => Ok(Term::literal(s)),
            },
            Some(Tok::Integer(n)) => numeric(self, n, "integer"),
            Some(Tok::Decimal(n)) => numeric(self, n, "decimal"),
            Some(Tok::Double(n)) => numeric(self, n, "double"),
            Some(Tok::Word(w)) if w == "true" || w == "false" => {
                self.turtle_only("a boolean shorthand literal")?;
                Ok(Term::typed_literal(w, format!("{XSD}boolean")))
            }
            Some(t) => {
                self.i -= 1;
                self.fail(format!("unexpected {t} in object position"))
            }
            None => self.fail("unexpected end of input"),
        }
    }
}
