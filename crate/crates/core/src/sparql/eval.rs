use super::query::{AlignmentQuery, Arity, PatternTerm};
use crate::rdf::{KnowledgeGraph, Term, TermId};
use std::collections::{BTreeSet, HashMap};

/// Distinct solutions of a query, projected on its selected variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSet {
    arity: Arity,
    rows: BTreeSet<Vec<Term>>,
}

impl AnswerSet {
    pub fn empty(arity: Arity) -> Self {
        AnswerSet {
            arity,
            rows: BTreeSet::new(),
        }
    }

    /// Panics if a row length differs from the arity.
    pub fn from_rows<I: IntoIterator<Item = Vec<Term>>>(arity: Arity, rows: I) -> Self {
        let rows: BTreeSet<Vec<Term>> = rows.into_iter().collect();
        assert!(rows.iter().all(|r| r.len() == arity.width()), "row arity mismatch");
        AnswerSet { arity, rows }
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn rows(&self) -> &BTreeSet<Vec<Term>> {
        &self.rows
    }

    pub fn into_rows(self) -> BTreeSet<Vec<Term>> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Const(TermId),
    Var(usize),
}

type IdPattern = [Slot; 3];

/// Evaluates a basic graph pattern with index nested-loop joins.
///
/// Patterns are reordered greedily: the next pattern is the cheapest one
/// by index count, preferring patterns that share an already bound
/// variable. Solutions are always deduplicated.
pub fn evaluate(query: &AlignmentQuery, graph: &KnowledgeGraph) -> AnswerSet {
    let mut var_index: HashMap<&str, usize> = HashMap::new();
    let mut compiled: Vec<IdPattern> = Vec::with_capacity(query.patterns().len());
    for p in query.patterns() {
        let mut slots = [Slot::Var(0); 3];
        for (slot, pos) in slots.iter_mut().zip(p.positions()) {
            *slot = match pos {
                PatternTerm::Var(v) => {
                    let next = var_index.len();
                    Slot::Var(*var_index.entry(v.as_str()).or_insert(next))
                }
                PatternTerm::Term(t) => match graph.id(t) {
                    Some(id) => Slot::Const(id),
                    None => return AnswerSet::empty(query.arity()),
                },
            };
        }
        compiled.push(slots);
    }
    let order = join_order(&compiled, graph);
    let ordered: Vec<IdPattern> = order.into_iter().map(|i| compiled[i]).collect();
    let projection: Vec<usize> = query.select_vars().iter().map(|v| var_index[v.as_str()]).collect();

    let mut bindings: Vec<Option<TermId>> = vec![None; var_index.len()];
    let mut rows: BTreeSet<Vec<TermId>> = BTreeSet::new();
    join(graph, &ordered, &mut bindings, &projection, &mut rows);
    AnswerSet {
        arity: query.arity(),
        rows: rows
            .into_iter()
            .map(|r| r.into_iter().map(|id| graph.term(id).clone()).collect())
            .collect(),
    }
}

fn join_order(patterns: &[IdPattern], graph: &KnowledgeGraph) -> Vec<usize> {
    let constant = |s: Slot| match s {
        Slot::Const(id) => Some(id),
        Slot::Var(_) => None,
    };
    let estimate: Vec<usize> = patterns
        .iter()
        .map(|p| graph.count_ids(constant(p[0]), constant(p[1]), constant(p[2])))
        .collect();
    let mut bound: BTreeSet<usize> = BTreeSet::new();
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let connected = |i: usize| {
            patterns[i]
                .iter()
                .any(|s| matches!(s, Slot::Var(v) if bound.contains(v)))
        };
        let any_connected = remaining.iter().any(|&i| connected(i));
        let (k, &best) = remaining
            .iter()
            .enumerate()
            .filter(|&(_, &i)| !any_connected || connected(i))
            .min_by_key(|&(_, &i)| (estimate[i], i))
            .expect("nonempty");
        remaining.remove(k);
        for s in patterns[best] {
            if let Slot::Var(v) = s {
                bound.insert(v);
            }
        }
        order.push(best);
    }
    order
}

fn join(
    graph: &KnowledgeGraph,
    patterns: &[IdPattern],
    bindings: &mut Vec<Option<TermId>>,
    projection: &[usize],
    out: &mut BTreeSet<Vec<TermId>>,
) {
    let Some((first, rest)) = patterns.split_first() else {
        out.insert(projection.iter().map(|&v| bindings[v].expect("selected var bound")).collect());
        return;
    };
    let resolve = |s: Slot, b: &[Option<TermId>]| match s {
        Slot::Const(id) => Some(id),
        Slot::Var(v) => b[v],
    };
    let (s, p, o) = (
        resolve(first[0], bindings),
        resolve(first[1], bindings),
        resolve(first[2], bindings),
    );
    for triple in graph.match_ids(s, p, o) {
        let mut newly: Vec<usize> = Vec::new();
        let mut consistent = true;
        for (slot, value) in first.iter().zip(triple) {
            if let Slot::Var(v) = *slot {
                match bindings[v] {
                    None => {
                        bindings[v] = Some(value);
                        newly.push(v);
                    }
                    // repeated variable inside one pattern
                    Some(existing) if existing != value => {
                        consistent = false;
                        break;
                    }
                    Some(_) => {}
                }
            }
        }
        if consistent {
            join(graph, rest, bindings, projection, out);
        }
        for v in newly {
            bindings[v] = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Triple, RDF_TYPE};
    use crate::sparql::parse_query;

    fn iri(s: &str) -> Term {
        Term::iri(s)
    }

    #[test]
    fn two_accepted_papers() {
        let g = KnowledgeGraph::from_triples(
            vec![
                Triple::new(iri("paper1"), iri(RDF_TYPE), iri(":AcceptedPaper")),
                Triple::new(iri("paper2"), iri(RDF_TYPE), iri(":AcceptedPaper")),
                Triple::new(iri("paper3"), iri(RDF_TYPE), iri(":Paper")),
            ],
            &[],
        );
        let q = parse_query("SELECT distinct ?s WHERE { ?s a <:AcceptedPaper>. }").unwrap();
        let a = evaluate(&q, &g);
        assert_eq!(a.len(), 2);
        assert!(a.rows().contains(&vec![iri("paper1")]));
    }

    #[test]
    fn empty_graph_gives_empty_answers() {
        let g = KnowledgeGraph::from_triples(Vec::new(), &[]);
        let q = parse_query("SELECT ?s WHERE { ?s ?p ?o }").unwrap();
        assert!(evaluate(&q, &g).is_empty());
    }

    #[test]
    fn join_on_shared_variable_and_repeated_variable() {
        let g = KnowledgeGraph::from_triples(
            vec![
                Triple::new(iri("p1"), iri("hasDecision"), iri("d1")),
                Triple::new(iri("d1"), iri(RDF_TYPE), iri("Acceptance")),
                Triple::new(iri("p2"), iri("hasDecision"), iri("d2")),
                Triple::new(iri("d2"), iri(RDF_TYPE), iri("Rejection")),
                Triple::new(iri("x"), iri("same"), iri("x")),
                Triple::new(iri("x"), iri("same"), iri("y")),
            ],
            &[],
        );
        let q = parse_query("SELECT ?p ?d WHERE { ?p <hasDecision> ?d . ?d a <Acceptance> }").unwrap();
        let a = evaluate(&q, &g);
        assert_eq!(a.rows().iter().collect::<Vec<_>>(), vec![&vec![iri("p1"), iri("d1")]]);
        let q = parse_query("SELECT ?x WHERE { ?x <same> ?x }").unwrap();
        assert_eq!(evaluate(&q, &g).len(), 1);
    }

    #[test]
    fn unknown_constants_match_nothing() {
        let g = KnowledgeGraph::from_triples(vec![Triple::new(iri("a"), iri("p"), iri("b"))], &[]);
        let q = parse_query("SELECT ?s WHERE { ?s <p> ?o . ?s <nope> ?o }").unwrap();
        assert!(evaluate(&q, &g).is_empty());
    }
}
