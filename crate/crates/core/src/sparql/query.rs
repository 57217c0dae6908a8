use crate::lex::{Lexer, Pos, Spanned, Tok};
use crate::rdf::{Term, RDF_TYPE, XSD};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("unsupported SPARQL feature: {0}")]
    UnsupportedFeature(String),
    #[error("syntax error at {line}:{col}: {reason}")]
    Syntax { line: usize, col: usize, reason: String },
    #[error("invalid query: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arity {
    Unary,
    Binary,
}

impl Arity {
    pub fn width(self) -> usize {
        match self {
            Arity::Unary => 1,
            Arity::Binary => 2,
        }
    }
}

/// A pattern position: a constant term or a variable name (without `?`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternTerm {
    Term(Term),
    Var(String),
}

impl PatternTerm {
    pub fn var(name: impl Into<String>) -> Self {
        PatternTerm::Var(name.into())
    }

    pub fn iri(iri: impl Into<String>) -> Self {
        PatternTerm::Term(Term::iri(iri))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }

    pub fn as_term(&self) -> Option<&Term> {
        match self {
            PatternTerm::Term(t) => Some(t),
            PatternTerm::Var(_) => None,
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Term(t) => t.fmt(f),
            PatternTerm::Var(v) => write!(f, "?{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// A validated unary or binary SELECT query over a basic graph pattern.
///
/// Equality ignores the original source text.
#[derive(Debug, Clone)]
pub struct AlignmentQuery {
    arity: Arity,
    select_vars: Vec<String>,
    patterns: Vec<TriplePattern>,
    distinct: bool,
    source_text: String,
}

impl PartialEq for AlignmentQuery {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity
            && self.select_vars == other.select_vars
            && self.patterns == other.patterns
            && self.distinct == other.distinct
    }
}

impl Eq for AlignmentQuery {}

impl AlignmentQuery {
    /// Builds and validates a query; the source text is the printed form.
    pub fn new(select_vars: Vec<String>, patterns: Vec<TriplePattern>, distinct: bool) -> Result<Self, QueryError> {
        let mut q = AlignmentQuery {
            arity: Arity::Unary,
            select_vars,
            patterns,
            distinct,
            source_text: String::new(),
        };
        q.validate()?;
        q.source_text = q.to_string();
        Ok(q)
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn select_vars(&self) -> &[String] {
        &self.select_vars
    }

    pub fn patterns(&self) -> &[TriplePattern] {
        &self.patterns
    }

    pub fn distinct(&self) -> bool {
        self.distinct
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    /// Same query with its patterns in another order.
    pub fn with_patterns(&self, patterns: Vec<TriplePattern>) -> Result<Self, QueryError> {
        AlignmentQuery::new(self.select_vars.clone(), patterns, self.distinct)
    }

    fn validate(&mut self) -> Result<(), QueryError> {
        self.arity = match self.select_vars.len() {
            1 => Arity::Unary,
            2 => Arity::Binary,
            0 => return Err(QueryError::Invalid("no selected variable".into())),
            n => {
                return Err(QueryError::UnsupportedFeature(format!(
                    "{n} selected variables (at most two)"
                )))
            }
        };
        if self.select_vars[0] == *self.select_vars.last().unwrap() && self.select_vars.len() == 2 {
            return Err(QueryError::Invalid("duplicate selected variable".into()));
        }
        if self.patterns.is_empty() {
            return Err(QueryError::Invalid("empty graph pattern".into()));
        }
        for p in &self.patterns {
            if matches!(&p.subject, PatternTerm::Term(t) if t.is_literal()) {
                return Err(QueryError::Invalid(format!("literal subject in {p}")));
            }
            if matches!(&p.predicate, PatternTerm::Term(t) if !t.is_iri()) {
                return Err(QueryError::Invalid(format!("non-IRI predicate in {p}")));
            }
        }
        for v in &self.select_vars {
            if !self.patterns.iter().any(|p| p.vars().any(|x| x == v)) {
                return Err(QueryError::Invalid(format!("?{v} does not occur in the pattern")));
            }
        }
        // every variable must be reachable from a selected one through
        // patterns sharing variables
        let mut reached: BTreeSet<&str> = self.select_vars.iter().map(String::as_str).collect();
        loop {
            let before = reached.len();
            for p in &self.patterns {
                if p.vars().any(|v| reached.contains(v)) {
                    reached.extend(p.vars());
                }
            }
            if reached.len() == before {
                break;
            }
        }
        for p in &self.patterns {
            if let Some(v) = p.vars().find(|v| !reached.contains(v)) {
                return Err(QueryError::Invalid(format!(
                    "?{v} is not connected to a selected variable"
                )));
            }
        }
        Ok(())
    }

    /// IRIs mentioned by the patterns, except `rdf:type`, deduplicated in
    /// first-occurrence order.
    pub fn entities(&self) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        for p in &self.patterns {
            for t in p.positions().into_iter().filter_map(PatternTerm::as_term) {
                if t.is_iri() && !t.is_rdf_type() && !out.contains(t) {
                    out.push(t.clone());
                }
            }
        }
        out
    }
}

impl fmt::Display for AlignmentQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        for v in &self.select_vars {
            write!(f, "?{v} ")?;
        }
        f.write_str("WHERE {\n")?;
        for p in &self.patterns {
            writeln!(f, "  {p}")?;
        }
        f.write_str("}\n")
    }
}

/// Parses the supported SELECT subset. `PREFIX` declarations are expanded
/// and `a` becomes `rdf:type`.
pub fn parse_query(text: &str) -> Result<AlignmentQuery, QueryError> {
    let tokens = Lexer::new(text, true).tokenize().map_err(|e| QueryError::Syntax {
        line: e.pos.line,
        col: e.pos.col,
        reason: e.reason,
    })?;
    let mut p = QueryParser {
        tokens,
        i: 0,
        prefixes: HashMap::new(),
        base: None,
    };
    let (select_vars, patterns, distinct) = p.query()?;
    let mut q = AlignmentQuery::new(select_vars, patterns, distinct)?;
    q.source_text = text.to_string();
    Ok(q)
}

const UNSUPPORTED_IN_GROUP: &[&str] = &[
    "FILTER", "OPTIONAL", "UNION", "MINUS", "BIND", "VALUES", "GRAPH", "SERVICE", "SELECT",
];
const UNSUPPORTED_MODIFIERS: &[&str] = &["LIMIT", "OFFSET", "ORDER", "GROUP", "HAVING"];

struct QueryParser {
    tokens: Vec<Spanned>,
    i: usize,
    prefixes: HashMap<String, String>,
    base: Option<String>,
}

impl QueryParser {
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

    fn fail<T>(&self, reason: impl Into<String>) -> Result<T, QueryError> {
        let pos = self.pos();
        Err(QueryError::Syntax {
            line: pos.line,
            col: pos.col,
            reason: reason.into(),
        })
    }

    fn peek_keyword(&self) -> Option<String> {
        match self.peek() {
            Some(Tok::Word(w)) => Some(w.to_ascii_uppercase()),
            _ => None,
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword().as_deref() == Some(kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), QueryError> {
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

    fn is_punct(&self, c: char) -> bool {
        matches!(self.peek(), Some(Tok::Punct(p)) if *p == c)
    }

    fn query(&mut self) -> Result<(Vec<String>, Vec<TriplePattern>, bool), QueryError> {
        loop {
            match self.peek_keyword().as_deref() {
                Some("PREFIX") => {
                    self.i += 1;
                    let prefix = match self.tokens.get(self.i).map(|s| s.tok.clone()) {
                        Some(Tok::PrefixedName { prefix, local }) if local.is_empty() => prefix,
                        _ => return self.fail("expected prefix name ending in ':'"),
                    };
                    self.i += 1;
                    let iri = match self.tokens.get(self.i).map(|s| s.tok.clone()) {
                        Some(Tok::IriRef(iri)) => iri,
                        _ => return self.fail("expected IRI in PREFIX declaration"),
                    };
                    self.i += 1;
                    self.prefixes.insert(prefix, iri);
                }
                Some("BASE") => {
                    self.i += 1;
                    match self.tokens.get(self.i).map(|s| s.tok.clone()) {
                        Some(Tok::IriRef(iri)) => self.base = Some(iri),
                        _ => return self.fail("expected IRI in BASE declaration"),
                    }
                    self.i += 1;
                }
                _ => break,
            }
        }
        match self.peek_keyword().as_deref() {
            Some("SELECT") => self.i += 1,
            Some(kw @ ("CONSTRUCT" | "ASK" | "DESCRIBE")) => {
                return Err(QueryError::UnsupportedFeature(format!("{kw} query form")))
            }
            _ => return self.fail("expected SELECT"),
        }
        let distinct = self.eat_keyword("DISTINCT");
        if !distinct {
            self.eat_keyword("REDUCED");
        }
        let mut vars: Vec<String> = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Var(v)) => {
                    vars.push(v.clone());
                    self.i += 1;
                }
                Some(Tok::Punct('*')) => return Err(QueryError::UnsupportedFeature("SELECT *".into())),
                Some(Tok::Punct('(')) => {
                    return Err(QueryError::UnsupportedFeature("projection expressions".into()))
                }
                _ => break,
            }
        }
        if vars.is_empty() {
            return self.fail("expected selected variables");
        }
        if vars.len() > 2 {
            return Err(QueryError::UnsupportedFeature(format!(
                "{} selected variables (at most two)",
                vars.len()
            )));
        }
        if self.eat_keyword("FROM") {
            return Err(QueryError::UnsupportedFeature("FROM".into()));
        }
        self.eat_keyword("WHERE");
        self.expect_punct('{')?;
        let patterns = self.group()?;
        self.expect_punct('}')?;
        if let Some(kw) = self.peek_keyword() {
            if UNSUPPORTED_MODIFIERS.contains(&kw.as_str()) {
                return Err(QueryError::UnsupportedFeature(kw));
            }
        }
        if let Some(t) = self.peek() {
            let t = t.to_string();
            return self.fail(format!("unexpected {t} after query"));
        }
        Ok((vars, patterns, distinct))
    }

    fn group(&mut self) -> Result<Vec<TriplePattern>, QueryError> {
        let mut out = Vec::new();
        loop {
            if self.is_punct('}') || self.peek().is_none() {
                return Ok(out);
            }
            if self.is_punct('{') {
                return Err(QueryError::UnsupportedFeature("nested group patterns".into()));
            }
            if let Some(kw) = self.peek_keyword() {
                if UNSUPPORTED_IN_GROUP.contains(&kw.as_str()) {
                    return Err(QueryError::UnsupportedFeature(kw));
                }
            }
            let subject = self.node(false)?;
            self.predicate_object_list(subject, &mut out)?;
            if self.is_punct('.') {
                self.i += 1;
            } else if !self.is_punct('}') {
                if let Some(kw) = self.peek_keyword() {
                    if UNSUPPORTED_IN_GROUP.contains(&kw.as_str()) {
                        return Err(QueryError::UnsupportedFeature(kw));
                    }
                }
                let t = self.peek().map(ToString::to_string).unwrap_or_default();
                return self.fail(format!("expected '.' or '}}', found {t}"));
            }
        }
    }

    fn predicate_object_list(&mut self, subject: PatternTerm, out: &mut Vec<TriplePattern>) -> Result<(), QueryError> {
        loop {
            let predicate = if matches!(self.peek(), Some(Tok::Word(w)) if w == "a") {
                self.i += 1;
                PatternTerm::iri(RDF_TYPE)
            } else {
                self.node(false)?
            };
            loop {
                let object = self.node(true)?;
                out.push(TriplePattern::new(subject.clone(), predicate.clone(), object));
                if self.is_punct(',') {
                    self.i += 1;
                } else {
                    break;
                }
            }
            if !self.is_punct(';') {
                return Ok(());
            }
            while self.is_punct(';') {
                self.i += 1;
            }
            if self.is_punct('.') || self.is_punct('}') {
                return Ok(());
            }
        }
    }

    fn iri(&self, iri: String) -> Result<PatternTerm, QueryError> {
        let iri = match &self.base {
            Some(base) if !iri.contains(':') => format!("{base}{iri}"),
            _ => iri,
        };
        match Term::try_iri(iri) {
            Ok(t) => Ok(PatternTerm::Term(t)),
            Err(e) => self.fail(e.to_string()),
        }
    }

    fn node(&mut self, allow_literal: bool) -> Result<PatternTerm, QueryError> {
        let Some(tok) = self.peek().cloned() else {
            return self.fail("unexpected end of input");
        };
        let literal_ok = |this: &Self| -> Result<(), QueryError> {
            if allow_literal {
                Ok(())
            } else {
                this.fail("literal not allowed in this position")
            }
        };
        let node = match tok {
            Tok::Var(v) => PatternTerm::Var(v),
            Tok::IriRef(iri) => self.iri(iri)?,
            Tok::PrefixedName { prefix, local } => match self.prefixes.get(&prefix) {
                Some(ns) => self.iri(format!("{ns}{local}"))?,
                None => return self.fail(format!("undeclared prefix '{prefix}:'")),
            },
            Tok::Str(s) => {
                literal_ok(self)?;
                self.i += 1;
                let term = match self.peek().cloned() {
                    Some(Tok::LangTag(l)) => {
                        self.i += 1;
                        Term::lang_literal(s, l)
                    }
                    Some(Tok::DoubleCaret) => {
                        self.i += 1;
                        match self.node(false)? {
                            PatternTerm::Term(dt) if dt.is_iri() => Term::typed_literal(s, dt.value()),
                            _ => return self.fail("expected datatype IRI"),
                        }
                    }
                    _ => Term::literal(s),
                };
                return Ok(PatternTerm::Term(term));
            }
            Tok::Integer(n) | Tok::Decimal(n) | Tok::Double(n) => {
                literal_ok(self)?;
                let ty = match self.peek() {
                    Some(Tok::Integer(_)) => "integer",
                    Some(Tok::Decimal(_)) => "decimal",
                    _ => "double",
                };
                PatternTerm::Term(Term::typed_literal(n, format!("{XSD}{ty}")))
            }
            Tok::Word(w) if w == "true" || w == "false" => {
                literal_ok(self)?;
                PatternTerm::Term(Term::typed_literal(w, format!("{XSD}boolean")))
            }
            Tok::BlankLabel(_) | Tok::Punct('[') => {
                return Err(QueryError::UnsupportedFeature("blank nodes in query patterns".into()))
            }
            Tok::Punct('(') => return Err(QueryError::UnsupportedFeature("collections".into())),
            Tok::Punct('|') | Tok::Punct('!') => {
                return Err(QueryError::UnsupportedFeature("property paths".into()))
            }
            Tok::Word(w) if UNSUPPORTED_IN_GROUP.contains(&w.to_ascii_uppercase().as_str()) => {
                return Err(QueryError::UnsupportedFeature(w.to_ascii_uppercase()))
            }
            other => return self.fail(format!("unexpected {other}")),
        };
        self.i += 1;
        Ok(node)
    }
}

/// Groups the patterns by variable for callers that walk the query graph.
pub(crate) fn patterns_by_var(patterns: &[TriplePattern]) -> BTreeMap<&str, Vec<usize>> {
    let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in patterns.iter().enumerate() {
        for v in p.vars() {
            let e = out.entry(v).or_default();
            if e.last() != Some(&i) {
                e.push(i);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unary_query_from_the_example() {
        let q = parse_query("SELECT distinct ?s WHERE { ?s a <:AcceptedPaper>. }").unwrap();
        assert_eq!(q.arity(), Arity::Unary);
        assert!(q.distinct());
        assert_eq!(q.patterns().len(), 1);
        assert_eq!(q.patterns()[0].predicate, PatternTerm::iri(RDF_TYPE));
        assert_eq!(q.patterns()[0].object, PatternTerm::iri(":AcceptedPaper"));
    }

    #[test]
    fn binary_query() {
        let q = parse_query("SELECT ?p ?d WHERE { ?p <:hasDecision> ?d . }").unwrap();
        assert_eq!(q.arity(), Arity::Binary);
        assert_eq!(q.select_vars(), ["p", "d"]);
    }

    #[test]
    fn three_variables_unsupported() {
        let err = parse_query("SELECT ?a ?b ?c WHERE { ?a <p> ?b . ?b <q> ?c }").unwrap_err();
        assert!(matches!(err, QueryError::UnsupportedFeature(_)), "{err}");
    }

    #[test]
    fn unsupported_features() {
        for text in [
            "SELECT ?s WHERE { ?s a <C> FILTER(?s != <x>) }",
            "SELECT ?s WHERE { ?s a <C> OPTIONAL { ?s <p> ?o } }",
            "SELECT ?s WHERE { { ?s a <C> } UNION { ?s a <D> } }",
            "SELECT ?s WHERE { ?s a <C> } LIMIT 10",
            "SELECT ?s WHERE { ?s a <C> } ORDER BY ?s",
            "CONSTRUCT { ?s a <C> } WHERE { ?s a <D> }",
            "ASK { ?s a <C> }",
            "SELECT * WHERE { ?s a <C> }",
        ] {
            let err = parse_query(text).unwrap_err();
            assert!(matches!(err, QueryError::UnsupportedFeature(_)), "{text}: {err}");
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_query("SELECT ?s WHERE {\n ?s a }").unwrap_err();
        match err {
            QueryError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn prefixes_and_lists_expand() {
        let q = parse_query(
            "PREFIX ex: <http://ex.org/>\nSELECT ?s WHERE { ?s a ex:Paper ; ex:hasDecision ?d , ex:acc1 . ?d a ex:Acceptance }",
        )
        .unwrap();
        assert_eq!(q.patterns().len(), 4);
        assert_eq!(q.patterns()[1].predicate, PatternTerm::iri("http://ex.org/hasDecision"));
    }

    #[test]
    fn validation() {
        assert!(matches!(
            parse_query("SELECT ?x WHERE { ?s a <C> }"),
            Err(QueryError::Invalid(_))
        ));
        assert!(matches!(
            parse_query("SELECT ?s WHERE { ?s a <C> . ?x <p> ?y }"),
            Err(QueryError::Invalid(_))
        ));
        assert!(matches!(
            parse_query("SELECT ?s WHERE { \"x\" <p> ?s }"),
            Err(QueryError::Syntax { .. })
        ));
    }

    #[test]
    fn entities_exclude_rdf_type() {
        let q = parse_query("SELECT ?s WHERE { ?s a <C> . ?s <p> ?o . ?o a <C> }").unwrap();
        assert_eq!(q.entities(), vec![Term::iri("C"), Term::iri("p")]);
        let q = parse_query("SELECT ?s ?t WHERE { ?s a ?t }").unwrap();
        assert!(q.entities().is_empty());
    }

    #[test]
    fn print_parse_fixpoint() {
        let q = parse_query(
            "PREFIX ex: <http://ex.org/> SELECT ?s ?v WHERE { ?s a ex:Paper ; ex:title ?v ; ex:year 2020 ; ex:n \"a\\\"b\"@en }",
        )
        .unwrap();
        let printed = q.to_string();
        let again = parse_query(&printed).unwrap();
        assert_eq!(q, again);
        assert_eq!(printed, again.to_string());
    }

    #[test]
    fn predicate_variables_are_allowed() {
        let q = parse_query("SELECT ?s ?p WHERE { ?s ?p <o> }").unwrap();
        assert_eq!(q.patterns()[0].predicate, PatternTerm::var("p"));
    }
}
