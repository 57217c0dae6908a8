//! Brute-force reference implementations. None of these touch the
//! library's indexes or join code.

#![allow(dead_code)]

use kgalign::rdf::{Term, Triple, RDF_TYPE};
use kgalign::sparql::{AlignmentQuery, PatternTerm};
use kgalign::subgraphs::{Direction, PathSubgraph};
use rand::rngs::StdRng;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};

/// `[classical, recall-oriented, precision-oriented, overlap, f-measure]`
/// over plain vectors, membership by linear search.
pub fn metrics(eval: &[u32], reference: &[u32]) -> [f64; 5] {
    let dedup = |xs: &[u32]| {
        let mut out: Vec<u32> = Vec::new();
        for &x in xs {
            if !out.contains(&x) {
                out.push(x);
            }
        }
        out
    };
    let (e, r) = (dedup(eval), dedup(reference));
    let shared = e.iter().filter(|x| r.contains(x)).count();
    let div = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let qp = div(shared, e.len());
    let qr = div(shared, r.len());
    let f = if qp + qr == 0.0 { 0.0 } else { 2.0 * qp * qr / (qp + qr) };
    let equal = e.len() == r.len() && shared == e.len();
    let classical = if equal && !r.is_empty() { 1.0 } else { 0.0 };
    let overlap = div(shared, e.len().min(r.len()));
    [classical, qr, qp, overlap, f]
}

/// Textbook dynamic-programming edit distance over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn levenshtein_sim(a: &str, b: &str) -> f64 {
    let n = a.chars().count().max(b.chars().count());
    if n == 0 {
        1.0
    } else {
        1.0 - levenshtein(a, b) as f64 / n as f64
    }
}

/// Joins the patterns one at a time against every triple.
pub fn nested_loop(query: &AlignmentQuery, triples: &[Triple]) -> BTreeSet<Vec<Term>> {
    let mut solutions: Vec<BTreeMap<String, Term>> = vec![BTreeMap::new()];
    for p in query.patterns() {
        let mut next = Vec::new();
        for binding in &solutions {
            for t in triples {
                let mut b = binding.clone();
                let ok = [(&p.subject, &t.subject), (&p.predicate, &t.predicate), (&p.object, &t.object)]
                    .into_iter()
                    .all(|(pat, term)| match pat {
                        PatternTerm::Term(c) => c == term,
                        PatternTerm::Var(v) => match b.get(v) {
                            Some(bound) => bound == term,
                            None => {
                                b.insert(v.clone(), term.clone());
                                true
                            }
                        },
                    });
                if ok {
                    next.push(b);
                }
            }
        }
        solutions = next;
    }
    solutions
        .into_iter()
        .map(|b| query.select_vars().iter().map(|v| b[v].clone()).collect())
        .collect()
}

pub fn linear_match(triples: &[Triple], s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> BTreeSet<Triple> {
    triples
        .iter()
        .filter(|t| s.is_none_or(|x| *x == t.subject) && p.is_none_or(|x| *x == t.predicate) && o.is_none_or(|x| *x == t.object))
        .cloned()
        .collect()
}

/// Every simple path of at most `max_len` edges, grown breadth-first from
/// the full triple list.
pub fn simple_paths(triples: &[Triple], from: &Term, to: &Term, max_len: usize) -> BTreeSet<PathSubgraph> {
    let mut out = BTreeSet::new();
    if from == to || from.is_literal() {
        return out;
    }
    let mut frontier = vec![PathSubgraph {
        nodes: vec![from.clone()],
        properties: Vec::new(),
    }];
    for _ in 0..max_len {
        let mut grown = Vec::new();
        for path in &frontier {
            let here = path.nodes.last().unwrap();
            if here != from && (here.is_literal() || here == to) {
                continue;
            }
            for t in triples.iter().filter(|t| t.predicate.value() != RDF_TYPE) {
                for (dir, a, b) in [
                    (Direction::Forward, &t.subject, &t.object),
                    (Direction::Inverse, &t.object, &t.subject),
                ] {
                    if a != here || path.nodes.contains(b) {
                        continue;
                    }
                    let mut p = path.clone();
                    p.nodes.push(b.clone());
                    p.properties.push((t.predicate.clone(), dir));
                    if b == to {
                        out.insert(p.clone());
                    }
                    grown.push(p);
                }
            }
        }
        frontier = grown;
    }
    out
}

pub fn ex(local: &str) -> Term {
    Term::iri(format!("http://ex.org/{local}"))
}

/// Random graph over a small vocabulary so joins actually meet.
pub fn random_triples(rng: &mut StdRng, max: usize, entities: usize) -> Vec<Triple> {
    let n = rng.gen_range(1..=max);
    let mut out = BTreeSet::new();
    for _ in 0..n {
        let s = ex(&format!("e{}", rng.gen_range(0..entities)));
        let (p, o) = match rng.gen_range(0..10) {
            0..=2 => (Term::iri(RDF_TYPE), ex(&format!("C{}", rng.gen_range(0..3)))),
            3 => (ex("name"), Term::literal(format!("n{}", rng.gen_range(0..4)))),
            _ => (ex(&format!("p{}", rng.gen_range(0..3))), ex(&format!("e{}", rng.gen_range(0..entities)))),
        };
        out.insert(Triple::new(s, p, o));
    }
    out.into_iter().collect()
}

fn sparql(t: &Term) -> String {
    if t.is_literal() {
        format!("\"{}\"", t.value())
    } else {
        format!("<{}>", t.value())
    }
}

/// A connected basic graph pattern of 1 to `max_patterns` triples with one
/// or two selected variables, as SPARQL text.
pub fn random_query(rng: &mut StdRng, max_patterns: usize, entities: usize) -> String {
    let n = rng.gen_range(1..=max_patterns);
    let mut vars: Vec<String> = vec!["a".into()];
    let mut patterns = Vec::new();
    for i in 0..n {
        let anchor = format!("?{}", vars[rng.gen_range(0..vars.len())]);
        let (pred, other) = match rng.gen_range(0..8) {
            0..=1 => ("a".to_string(), sparql(&ex(&format!("C{}", rng.gen_range(0..3))))),
            2 => (sparql(&ex("name")), sparql(&Term::literal(format!("n{}", rng.gen_range(0..4))))),
            _ => {
                let other = match rng.gen_range(0..4) {
                    0 => sparql(&ex(&format!("e{}", rng.gen_range(0..entities)))),
                    1 => format!("?{}", vars[rng.gen_range(0..vars.len())]),
                    _ => {
                        vars.push(format!("v{i}"));
                        format!("?v{i}")
                    }
                };
                (sparql(&ex(&format!("p{}", rng.gen_range(0..3)))), other)
            }
        };
        if rng.gen_bool(0.5) || other.starts_with('"') || pred == "a" {
            patterns.push(format!("{anchor} {pred} {other} ."));
        } else {
            patterns.push(format!("{other} {pred} {anchor} ."));
        }
    }
    let used = &vars;
    let select = if used.len() > 1 && rng.gen_bool(0.5) {
        format!("?{} ?{}", used[0], used[used.len() - 1])
    } else {
        format!("?{}", used[0])
    };
    format!("SELECT DISTINCT {select} WHERE {{ {} }}", patterns.join(" "))
}
