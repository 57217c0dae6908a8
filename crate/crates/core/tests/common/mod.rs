#![allow(dead_code)]

pub mod oracle;

use kgalign::embeddings::{EmbeddingStore, EmbeddingVector};
use kgalign::rdf::{default_label_predicates, KnowledgeGraph, Syntax};
use std::fs;
use std::path::{Path, PathBuf};

pub const S: &str = "http://cmt.example.org/onto#";
pub const T: &str = "http://conference.example.org/onto#";

pub fn s(local: &str) -> String {
    format!("{S}{local}")
}

pub fn t(local: &str) -> String {
    format!("{T}{local}")
}

const PREFIXES: &str = "\
@prefix s: <http://cmt.example.org/onto#> .
@prefix t: <http://conference.example.org/onto#> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix skos: <http://www.w3.org/2004/02/skos/core#> .
";

/// Source side: accepted papers and reviews, linked to the target with
/// owl:sameAs.
pub const CMT_TTL: &str = "
s:AcceptedPaper skos:prefLabel \"accepted paper\" .
s:Review skos:prefLabel \"Review\" .
s:p1 a s:AcceptedPaper ; owl:sameAs t:p1 .
s:p2 a s:AcceptedPaper ; owl:sameAs t:p2 .
s:p3 a s:Paper ; owl:sameAs t:p3 .
s:rv1 a s:Review ; owl:sameAs t:rv1 .
s:rv2 a s:Review ; owl:sameAs t:rv2 .
";

/// Target side: acceptance is expressed through a decision node, and
/// reviews point at their Reviewer.
pub const CONFERENCE_TTL: &str = "
t:Paper skos:prefLabel \"paper\" .
t:Acceptance skos:prefLabel \"acceptance\" .
t:Rejection skos:prefLabel \"rejection\" .
t:hasDecision skos:prefLabel \"has decision\" .
t:Review skos:prefLabel \"Review\" .
t:Reviewer skos:prefLabel \"Reviewer\" .
t:writtenBy skos:prefLabel \"written by\" .
t:p1 a t:Paper ; t:hasDecision t:d1 . t:d1 a t:Acceptance .
t:p2 a t:Paper ; t:hasDecision t:d2 . t:d2 a t:Acceptance .
t:p3 a t:Paper ; t:hasDecision t:d3 . t:d3 a t:Rejection .
t:rv1 a t:Review ; t:writtenBy t:u1 . t:u1 a t:Reviewer .
t:rv2 a t:Review ; t:writtenBy t:u2 . t:u2 a t:Reviewer .
";

pub const ACCEPTED_SOURCE_RQ: &str =
    "PREFIX s: <http://cmt.example.org/onto#>\nSELECT DISTINCT ?s WHERE { ?s a s:AcceptedPaper . }\n";
pub const ACCEPTED_TARGET_RQ: &str = "PREFIX t: <http://conference.example.org/onto#>\n\
SELECT DISTINCT ?s WHERE { ?s t:hasDecision ?d . ?d a t:Acceptance . }\n";
pub const REVIEW_SOURCE_RQ: &str =
    "PREFIX s: <http://cmt.example.org/onto#>\nSELECT DISTINCT ?s WHERE { ?s a s:Review . }\n";
pub const REVIEW_TARGET_RQ: &str =
    "PREFIX t: <http://conference.example.org/onto#>\nSELECT DISTINCT ?s WHERE { ?s a t:Review . }\n";

pub fn parse(body: &str) -> KnowledgeGraph {
    let text = format!("{PREFIXES}{body}");
    let triples = kgalign::rdf::parse_document(&text, Syntax::Turtle, "fixture").unwrap();
    KnowledgeGraph::from_triples(triples, &default_label_predicates())
}

pub fn cmt() -> KnowledgeGraph {
    parse(CMT_TTL)
}

pub fn conference() -> KnowledgeGraph {
    parse(CONFERENCE_TTL)
}

/// "accepted paper" is close to "acceptance" (cosine about 0.994) and
/// orthogonal to the other labels; "Review" and "Reviewer" are kept
/// apart (cosine about 0.29).
pub const CACHE: &[(&str, &[f64])] = &[
    ("accepted paper", &[1.0, 0.0, 0.0, 0.0]),
    ("acceptance", &[0.9, 0.1, 0.0, 0.0]),
    ("paper", &[0.0, 0.0, 1.0, 0.0]),
    ("rejection", &[0.0, 0.2, 0.0, 1.0]),
    ("has decision", &[0.0, 1.0, 0.0, 0.0]),
    ("Review", &[0.0, 0.0, 0.0, 1.0]),
    ("Reviewer", &[0.0, 1.0, 0.0, 0.3]),
    ("written by", &[0.0, 0.0, 1.0, 0.0]),
];

pub fn store(scale: f64) -> EmbeddingStore<f64> {
    EmbeddingStore::from_entries(
        CACHE
            .iter()
            .map(|(l, v)| (l.to_string(), EmbeddingVector::from_f64(&v.iter().map(|x| x * scale).collect::<Vec<_>>()).unwrap())),
        false,
    )
    .unwrap()
}

/// On-disk copy of the fixtures.
pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        fs::write(root.join("cmt.ttl"), format!("{PREFIXES}{CMT_TTL}")).unwrap();
        fs::write(root.join("conference.ttl"), format!("{PREFIXES}{CONFERENCE_TTL}")).unwrap();
        let q = root.join("queries");
        fs::create_dir(&q).unwrap();
        fs::write(q.join("accepted.source.rq"), ACCEPTED_SOURCE_RQ).unwrap();
        fs::write(q.join("accepted.target.rq"), ACCEPTED_TARGET_RQ).unwrap();
        fs::write(q.join("review.source.rq"), REVIEW_SOURCE_RQ).unwrap();
        fs::write(q.join("review.target.rq"), REVIEW_TARGET_RQ).unwrap();
        let mut cache = Vec::new();
        store(1.0).write(&mut cache).unwrap();
        fs::write(root.join("cache.txt"), cache).unwrap();
        Workspace { dir }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }
}
