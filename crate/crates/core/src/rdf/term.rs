use serde::{Deserialize, Serialize};
use std::fmt;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const OWL_THING: &str = "http://www.w3.org/2002/07/owl#Thing";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Iri,
    Literal,
    Blank,
}

/// Datatype IRI or language tag of a literal; never both.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralTag {
    Datatype(String),
    Lang(String),
}

/// An RDF node.
///
/// Ordering is lexicographic on the text value first, so sorted term
/// collections read naturally. Kind and literal tag only break ties.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Term {
    value: String,
    kind: TermKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<LiteralTag>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid IRI {0:?}")]
pub struct InvalidIri(pub String);

impl Term {
    /// Panics if `value` is empty or contains whitespace; use
    /// [`Term::try_iri`] for untrusted input.
    pub fn iri(value: impl Into<String>) -> Self {
        Self::try_iri(value).expect("valid IRI")
    }

    pub fn try_iri(value: impl Into<String>) -> Result<Self, InvalidIri> {
        let value = value.into();
        if value.is_empty() || value.chars().any(char::is_whitespace) {
            return Err(InvalidIri(value));
        }
        Ok(Term {
            value,
            kind: TermKind::Iri,
            tag: None,
        })
    }

    pub fn literal(lexical: impl Into<String>) -> Self {
        Term {
            value: lexical.into(),
            kind: TermKind::Literal,
            tag: None,
        }
    }

    pub fn typed_literal(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Term {
            value: lexical.into(),
            kind: TermKind::Literal,
            tag: Some(LiteralTag::Datatype(datatype.into())),
        }
    }

    pub fn lang_literal(lexical: impl Into<String>, lang: impl Into<String>) -> Self {
        Term {
            value: lexical.into(),
            kind: TermKind::Literal,
            tag: Some(LiteralTag::Lang(lang.into())),
        }
    }

    pub fn blank(id: impl Into<String>) -> Self {
        Term {
            value: id.into(),
            kind: TermKind::Blank,
            tag: None,
        }
    }

    pub fn kind(&self) -> TermKind {
        self.kind
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn tag(&self) -> Option<&LiteralTag> {
        self.tag.as_ref()
    }

    pub fn is_iri(&self) -> bool {
        self.kind == TermKind::Iri
    }

    pub fn is_literal(&self) -> bool {
        self.kind == TermKind::Literal
    }

    pub fn is_blank(&self) -> bool {
        self.kind == TermKind::Blank
    }

    pub fn is_rdf_type(&self) -> bool {
        self.is_iri() && self.value == RDF_TYPE
    }

    /// Literal with trimmed lexical form and no tag; other terms unchanged.
    pub fn normalized_literal(&self) -> Term {
        if self.is_literal() {
            Term::literal(self.value.trim())
        } else {
            self.clone()
        }
    }

    /// The part of an IRI after the last `#`, `/` or `:`.
    pub fn local_name(&self) -> &str {
        match self.kind {
            TermKind::Iri => {
                let trimmed = self.value.trim_end_matches(['/', '#']);
                match trimmed.rfind(['#', '/', ':']) {
                    Some(i) if i + 1 < trimmed.len() => &trimmed[i + 1..],
                    _ => trimmed,
                }
            }
            _ => &self.value,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TermKind::Iri => write!(f, "<{}>", self.value),
            TermKind::Blank => write!(f, "_:{}", self.value),
            TermKind::Literal => {
                f.write_str("\"")?;
                for c in self.value.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                match &self.tag {
                    Some(LiteralTag::Lang(l)) => write!(f, "@{l}"),
                    Some(LiteralTag::Datatype(d)) => write!(f, "^^<{d}>"),
                    None => Ok(()),
                }
            }
        }
    }
}

/// A statement. Subjects are never literals and predicates are always IRIs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    /// Panics when the subject is a literal or the predicate is not an IRI.
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        assert!(!subject.is_literal(), "literal subject {subject}");
        assert!(predicate.is_iri(), "non-IRI predicate {predicate}");
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// Splits an identifier on CamelCase boundaries, underscores, hyphens and
/// spaces, and lowercases it: `AcceptedPaper` becomes `accepted paper`.
pub fn split_identifier(name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if matches!(c, '_' | '-' | ' ' | '.') {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            continue;
        }
        if c.is_uppercase() && !current.is_empty() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            // `acceptedPaper`, and the end of an acronym as in `PCMember`
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                words.push(std::mem::take(&mut current));
            }
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        words.push(current);
    }
    words.join(" ")
}
