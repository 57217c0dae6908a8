//! RDF terms, Turtle/N-Triples parsing and the indexed triple store.

mod graph;
mod parse;
mod term;

pub use graph::{
    default_label_predicates, KnowledgeGraph, RdfError, TermId, RDFS_COMMENT, RDFS_LABEL,
    SKOSXL_LITERAL_FORM, SKOS_ALT_LABEL, SKOS_PREF_LABEL,
};
pub use parse::{parse_document, Syntax, SyntaxError};
pub use term::{split_identifier, InvalidIri, LiteralTag, Term, TermKind, Triple, OWL_THING, RDF_TYPE, XSD};
