use crate::rdf::{Term, OWL_THING};
use crate::sparql::{patterns_by_var, AlignmentQuery, Arity, PatternTerm, TriplePattern};
use crate::subgraphs::{AnchorPosition, Direction, PathSubgraph, TripleSubgraph};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Class and property expressions on either side of a correspondence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Expression {
    Class {
        iri: String,
    },
    Property {
        iri: String,
    },
    InverseProperty {
        property: Box<Expression>,
    },
    PropertyChain {
        properties: Vec<Expression>,
    },
    SomeValuesFrom {
        property: Box<Expression>,
        filler: Box<Expression>,
    },
    HasValue {
        value: Term,
    },
    Intersection {
        operands: Vec<Expression>,
    },
}

impl Expression {
    pub fn class(iri: impl Into<String>) -> Self {
        Expression::Class { iri: iri.into() }
    }

    pub fn property(iri: impl Into<String>) -> Self {
        Expression::Property { iri: iri.into() }
    }

    pub fn thing() -> Self {
        Expression::class(OWL_THING)
    }

    pub fn inverse(property: Expression) -> Self {
        Expression::InverseProperty {
            property: Box::new(property),
        }
    }

    pub fn some(property: Expression, filler: Expression) -> Self {
        Expression::SomeValuesFrom {
            property: Box::new(property),
            filler: Box::new(filler),
        }
    }

    pub fn has_value(value: Term) -> Self {
        Expression::HasValue { value }
    }

    /// Property expression for one edge walked in the given direction.
    pub fn edge(iri: impl Into<String>, direction: Direction) -> Self {
        match direction {
            Direction::Forward => Expression::property(iri),
            Direction::Inverse => Expression::inverse(Expression::property(iri)),
        }
    }

    /// Chain of the given steps; a single step stays as it is.
    pub fn chain(mut properties: Vec<Expression>) -> Self {
        if properties.len() == 1 {
            properties.pop().expect("one element")
        } else {
            Expression::PropertyChain { properties }
        }
    }

    /// Conjunction with sorted, deduplicated operands. Nested conjunctions
    /// are flattened, a single operand is returned unchanged and an empty
    /// conjunction is `owl:Thing`.
    pub fn and(operands: Vec<Expression>) -> Self {
        let mut flat: Vec<Expression> = Vec::new();
        for op in operands {
            match op {
                Expression::Intersection { operands } => flat.extend(operands),
                other => flat.push(other),
            }
        }
        flat.sort_by_cached_key(|e| e.to_string());
        flat.dedup();
        match flat.len() {
            0 => Expression::thing(),
            1 => flat.pop().expect("one element"),
            _ => Expression::Intersection { operands: flat },
        }
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&Expression> {
        match self {
            Expression::Intersection { operands } => operands.iter().collect(),
            other => vec![other],
        }
    }

    pub fn is_property(&self) -> bool {
        matches!(
            self,
            Expression::Property { .. } | Expression::InverseProperty { .. } | Expression::PropertyChain { .. }
        )
    }

    /// Structural checks: leaves carry an IRI, restrictions carry a
    /// property expression, chains have at least two steps.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Expression::Class { iri } | Expression::Property { iri } => !iri.is_empty(),
            Expression::InverseProperty { property } => property.is_property() && property.is_well_formed(),
            Expression::PropertyChain { properties } => {
                properties.len() >= 2 && properties.iter().all(|p| p.is_property() && p.is_well_formed())
            }
            Expression::SomeValuesFrom { property, filler } => {
                property.is_property() && property.is_well_formed() && !filler.is_property() && filler.is_well_formed()
            }
            Expression::HasValue { .. } => true,
            Expression::Intersection { operands } => {
                operands.len() >= 2 && operands.iter().all(|o| !o.is_property() && o.is_well_formed())
            }
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, items: &[Expression]| {
            for (i, e) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{e}")?;
            }
            Ok(())
        };
        match self {
            Expression::Class { iri } => write!(f, "Class(<{iri}>)"),
            Expression::Property { iri } => write!(f, "Property(<{iri}>)"),
            Expression::InverseProperty { property } => write!(f, "Inverse({property})"),
            Expression::PropertyChain { properties } => {
                f.write_str("Chain(")?;
                list(f, properties)?;
                f.write_str(")")
            }
            Expression::SomeValuesFrom { property, filler } => write!(f, "Some({property}, {filler})"),
            Expression::HasValue { value } => write!(f, "Value({value})"),
            Expression::Intersection { operands } => {
                f.write_str("And(")?;
                list(f, operands)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("query cannot be expressed as a class or property: {0}")]
pub struct ShapeError(pub String);

fn shape(reason: impl Into<String>) -> ShapeError {
    ShapeError(reason.into())
}

/// Source-side expression of a query.
///
/// Unary queries must be tree-shaped around the selected variable; every
/// atom becomes a conjunct, with variables reached over an edge turned into
/// existential restrictions. Binary queries must be a single path between
/// the two selected variables.
pub fn query_expression(query: &AlignmentQuery) -> Result<Expression, ShapeError> {
    let patterns = query.patterns();
    let by_var = patterns_by_var(patterns);
    match query.arity() {
        Arity::Unary => {
            let mut used = vec![false; patterns.len()];
            let mut seen = BTreeSet::new();
            let root = &query.select_vars()[0];
            let conjuncts = node(root, None, patterns, &by_var, &mut used, &mut seen)?;
            Ok(Expression::and(conjuncts))
        }
        Arity::Binary => path(query.select_vars(), patterns, &by_var),
    }
}

fn constant_predicate(p: &TriplePattern) -> Result<&Term, ShapeError> {
    p.predicate
        .as_term()
        .ok_or_else(|| shape("variable in predicate position"))
}

fn node(
    var: &str,
    parent: Option<usize>,
    patterns: &[TriplePattern],
    by_var: &std::collections::BTreeMap<&str, Vec<usize>>,
    used: &mut [bool],
    seen: &mut BTreeSet<String>,
) -> Result<Vec<Expression>, ShapeError> {
    seen.insert(var.to_string());
    let mut out = Vec::new();
    for &i in by_var.get(var).map(Vec::as_slice).unwrap_or_default() {
        if Some(i) == parent {
            continue;
        }
        if used[i] {
            return Err(shape("cyclic pattern"));
        }
        used[i] = true;
        let p = &patterns[i];
        let pred = constant_predicate(p)?;
        let at_subject = p.subject.as_var() == Some(var);
        let at_object = p.object.as_var() == Some(var);
        if at_subject && at_object {
            return Err(shape("self loop"));
        }
        if pred.is_rdf_type() {
            match (at_subject, p.object.as_term()) {
                (true, Some(class)) => out.push(Expression::class(class.value())),
                _ => return Err(shape("variable class")),
            }
            continue;
        }
        let (property, other) = if at_subject {
            (Expression::property(pred.value()), &p.object)
        } else {
            (Expression::inverse(Expression::property(pred.value())), &p.subject)
        };
        let filler = match other {
            PatternTerm::Term(t) => Expression::has_value(t.clone()),
            PatternTerm::Var(v) => {
                if seen.contains(v) {
                    return Err(shape("cyclic pattern"));
                }
                Expression::and(node(v, Some(i), patterns, by_var, used, seen)?)
            }
        };
        out.push(Expression::some(property, filler));
    }
    if parent.is_none() && used.iter().any(|u| !u) {
        return Err(shape("disconnected pattern"));
    }
    Ok(out)
}

fn path(
    vars: &[String],
    patterns: &[TriplePattern],
    by_var: &std::collections::BTreeMap<&str, Vec<usize>>,
) -> Result<Expression, ShapeError> {
    let (start, goal) = (vars[0].as_str(), vars[1].as_str());
    let mut steps = Vec::new();
    let mut used = vec![false; patterns.len()];
    let mut here = start;
    while here != goal {
        let next: Vec<usize> = by_var[here].iter().copied().filter(|&i| !used[i]).collect();
        let [i] = next.as_slice() else {
            return Err(shape("binary query is not a single path"));
        };
        used[*i] = true;
        let p = &patterns[*i];
        let pred = constant_predicate(p)?;
        if pred.is_rdf_type() {
            return Err(shape("class atom in binary query"));
        }
        let (s, o) = match (p.subject.as_var(), p.object.as_var()) {
            (Some(s), Some(o)) if s != o => (s, o),
            _ => return Err(shape("binary query edge without two variables")),
        };
        let (direction, other) = if s == here {
            (Direction::Forward, o)
        } else {
            (Direction::Inverse, s)
        };
        steps.push(Expression::edge(pred.value(), direction));
        here = other;
        if here == start {
            return Err(shape("cyclic pattern"));
        }
    }
    if used.iter().any(|u| !u) {
        return Err(shape("binary query is not a single path"));
    }
    Ok(Expression::chain(steps))
}

/// Target expression described by one triple around a linked instance.
/// Predicate-position anchors yield a bare property.
pub fn generalize_unary(sg: &TripleSubgraph) -> Expression {
    let t = &sg.triple;
    match sg.anchor {
        AnchorPosition::Subject if t.predicate.is_rdf_type() => Expression::class(t.object.value()),
        AnchorPosition::Subject => Expression::some(
            Expression::property(t.predicate.value()),
            sg.object_type
                .as_ref()
                .map_or_else(|| Expression::has_value(t.object.clone()), |c| Expression::class(c.value())),
        ),
        AnchorPosition::Object => Expression::some(
            Expression::inverse(Expression::property(t.predicate.value())),
            sg.subject_type
                .as_ref()
                .map_or_else(|| Expression::has_value(t.subject.clone()), |c| Expression::class(c.value())),
        ),
        AnchorPosition::Predicate => Expression::property(t.predicate.value()),
    }
}

pub fn generalize_binary(path: &PathSubgraph) -> Expression {
    Expression::chain(
        path.properties
            .iter()
            .map(|(p, d)| Expression::edge(p.value(), *d))
            .collect(),
    )
}
