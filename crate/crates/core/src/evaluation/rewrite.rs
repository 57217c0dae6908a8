use crate::alignment::{query_expression, Alignment, Expression};
use crate::rdf::{Term, OWL_THING, RDF_TYPE};
use crate::sparql::{AlignmentQuery, PatternTerm, TriplePattern};
use std::collections::BTreeSet;

struct Fresh(usize);

impl Fresh {
    fn next(&mut self) -> PatternTerm {
        self.0 += 1;
        PatternTerm::var(format!("x{}", self.0))
    }
}

fn property_patterns(
    e: &Expression,
    from: PatternTerm,
    to: PatternTerm,
    fresh: &mut Fresh,
    out: &mut Vec<TriplePattern>,
) -> Option<()> {
    match e {
        Expression::Property { iri } => {
            out.push(TriplePattern::new(from, PatternTerm::iri(iri.clone()), to));
            Some(())
        }
        Expression::InverseProperty { property } => property_patterns(property, to, from, fresh, out),
        Expression::PropertyChain { properties } => {
            let mut here = from;
            for (i, p) in properties.iter().enumerate() {
                let next = if i + 1 == properties.len() { to.clone() } else { fresh.next() };
                property_patterns(p, here, next.clone(), fresh, out)?;
                here = next;
            }
            Some(())
        }
        _ => None,
    }
}

fn class_patterns(e: &Expression, at: PatternTerm, fresh: &mut Fresh, out: &mut Vec<TriplePattern>) -> Option<()> {
    match e {
        Expression::Class { iri } if iri == OWL_THING => Some(()),
        Expression::Class { iri } => {
            out.push(TriplePattern::new(at, PatternTerm::iri(RDF_TYPE), PatternTerm::iri(iri.clone())));
            Some(())
        }
        Expression::SomeValuesFrom { property, filler } => match filler.as_ref() {
            Expression::HasValue { value } => property_patterns(property, at, PatternTerm::Term(value.clone()), fresh, out),
            other => {
                let x = fresh.next();
                property_patterns(property, at, x.clone(), fresh, out)?;
                class_patterns(other, x, fresh, out)
            }
        },
        Expression::Intersection { operands } => operands.iter().try_for_each(|o| class_patterns(o, at.clone(), fresh, out)),
        _ => None,
    }
}

/// Query selecting the instances of a class expression (`?s`) or the
/// pairs of a property expression (`?s ?o`).
///
/// Returns `None` for expressions without a pattern form: a bare
/// individual, `owl:Thing` alone, or a value in subject position.
pub fn realize(e: &Expression) -> Option<AlignmentQuery> {
    let mut fresh = Fresh(0);
    let mut patterns = Vec::new();
    let s = PatternTerm::var("s");
    let vars = if e.is_property() {
        property_patterns(e, s, PatternTerm::var("o"), &mut fresh, &mut patterns)?;
        vec!["s".to_string(), "o".to_string()]
    } else {
        class_patterns(e, s, &mut fresh, &mut patterns)?;
        vec!["s".to_string()]
    };
    let mut seen = BTreeSet::new();
    patterns.retain(|p| seen.insert(p.clone()));
    AlignmentQuery::new(vars, patterns, true).ok()
}

/// Property expression walked in the opposite direction.
pub fn invert(e: &Expression) -> Expression {
    match e {
        Expression::InverseProperty { property } => (**property).clone(),
        Expression::PropertyChain { properties } => Expression::PropertyChain {
            properties: properties.iter().rev().map(invert).collect(),
        },
        other => Expression::inverse(other.clone()),
    }
}

/// Target-vocabulary rewritings of a source query, one per applicable
/// correspondence in alignment order, without duplicates.
///
/// A correspondence applies to a unary query when its source conjuncts
/// are all conjuncts of the query, and to a binary query when its source
/// equals the query's property expression or its inverse.
pub fn rewrite(query: &AlignmentQuery, alignment: &Alignment) -> Vec<AlignmentQuery> {
    let expr = match query_expression(query) {
        Ok(e) => e,
        Err(e) => {
            log::warn!("no rewriting: {e}");
            return Vec::new();
        }
    };
    let query_conjuncts: BTreeSet<String> = expr.conjuncts().iter().map(|c| c.to_string()).collect();
    let inverse = expr.is_property().then(|| invert(&expr));
    let mut out: Vec<AlignmentQuery> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for c in &alignment.correspondences {
        let target = if expr.is_property() {
            if c.source == expr {
                c.target.clone()
            } else if Some(&c.source) == inverse.as_ref() && c.target.is_property() {
                invert(&c.target)
            } else {
                continue;
            }
        } else {
            if c.source.is_property() || !c.source.conjuncts().iter().all(|k| query_conjuncts.contains(&k.to_string())) {
                continue;
            }
            c.target.clone()
        };
        if target.is_property() != expr.is_property() {
            continue;
        }
        if let Some(q) = realize(&target) {
            if seen.insert(q.to_string()) {
                out.push(q);
            }
        }
    }
    out
}

/// Literals compared by trimmed lexical form only.
pub fn normalize_row(row: &[Term]) -> Vec<Term> {
    row.iter().map(Term::normalized_literal).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{Correspondence, Relation};
    use crate::sparql::parse_query;

    fn corr(source: Expression, target: Expression) -> Correspondence {
        Correspondence {
            source,
            target,
            relation: Relation::Equivalence,
            confidence: 1.0,
            support: 1,
        }
    }

    #[test]
    fn realization_rules() {
        let e = Expression::some(Expression::property("hasDecision"), Expression::class("Acceptance"));
        let q = realize(&e).unwrap();
        let expected = parse_query("SELECT DISTINCT ?s WHERE { ?s <hasDecision> ?x1 . ?x1 a <Acceptance> }").unwrap();
        assert_eq!(q, expected);
        let e = Expression::some(Expression::inverse(Expression::property("reviews")), Expression::thing());
        assert_eq!(realize(&e).unwrap(), parse_query("SELECT DISTINCT ?s WHERE { ?x1 <reviews> ?s }").unwrap());
        let e = Expression::chain(vec![Expression::property("a"), Expression::inverse(Expression::property("b"))]);
        assert_eq!(
            realize(&e).unwrap(),
            parse_query("SELECT DISTINCT ?s ?o WHERE { ?s <a> ?x1 . ?o <b> ?x1 }").unwrap()
        );
        assert!(realize(&Expression::thing()).is_none());
        assert!(realize(&Expression::has_value(Term::iri("i"))).is_none());
    }

    #[test]
    fn rewriting_applicability() {
        let mut a = Alignment::new("s", "t");
        assert!(rewrite(&parse_query("SELECT ?s WHERE { ?s a <AcceptedPaper> }").unwrap(), &a).is_empty());
        a.correspondences.push(corr(
            Expression::class("AcceptedPaper"),
            Expression::some(Expression::property("hasDecision"), Expression::class("Acceptance")),
        ));
        a.correspondences.push(corr(Expression::class("Other"), Expression::class("T")));
        a.correspondences.push(corr(Expression::property("p"), Expression::property("q")));
        let q = parse_query("SELECT ?s WHERE { ?s a <AcceptedPaper> . ?s a <Paper> }").unwrap();
        let rs = rewrite(&q, &a);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].patterns().len(), 2);
        let q = parse_query("SELECT ?a ?b WHERE { ?b <p> ?a }").unwrap();
        let rs = rewrite(&q, &a);
        assert_eq!(rs, vec![parse_query("SELECT DISTINCT ?s ?o WHERE { ?o <q> ?s }").unwrap()]);
    }

    #[test]
    fn inversion_is_an_involution() {
        let e = Expression::chain(vec![Expression::property("a"), Expression::inverse(Expression::property("b"))]);
        assert_eq!(invert(&invert(&e)), e);
    }
}
