//! Surroundings of linked target instances: incident triples for unary
//! queries and connecting paths for binary ones.

use crate::embeddings::{cosine, EmbeddingStore, EmbeddingVector};
use crate::rdf::{KnowledgeGraph, Term, TermId, Triple};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AnchorPosition {
    Subject,
    Predicate,
    Object,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripleSubgraph {
    pub triple: Triple,
    pub anchor: AnchorPosition,
    pub subject_type: Option<Term>,
    pub object_type: Option<Term>,
}

impl TripleSubgraph {
    /// The anchor's own class assertion, `(anchor, rdf:type, C)`.
    pub fn is_class_assertion(&self) -> bool {
        self.anchor == AnchorPosition::Subject && self.triple.predicate.is_rdf_type()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Direction {
    Forward,
    Inverse,
}

/// `nodes[i]` and `nodes[i + 1]` are joined by `properties[i]`: forward
/// means `(nodes[i], p, nodes[i + 1])` is in the graph, inverse means
/// `(nodes[i + 1], p, nodes[i])` is.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathSubgraph {
    pub nodes: Vec<Term>,
    pub properties: Vec<(Term, Direction)>,
}

impl PathSubgraph {
    pub fn len(&self) -> usize {
        self.properties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.properties.is_empty()
    }

    /// The statements this path walks over, in path order.
    pub fn edges(&self) -> Vec<Triple> {
        self.properties
            .iter()
            .enumerate()
            .map(|(i, (p, dir))| {
                let (s, o) = match dir {
                    Direction::Forward => (&self.nodes[i], &self.nodes[i + 1]),
                    Direction::Inverse => (&self.nodes[i + 1], &self.nodes[i]),
                };
                Triple {
                    subject: s.clone(),
                    predicate: p.clone(),
                    object: o.clone(),
                }
            })
            .collect()
    }
}

/// How to pick one class among several asserted for an entity.
#[derive(Debug, Clone, Copy)]
pub enum TypeChoice<'a, T> {
    /// Smallest class IRI; used when no embeddings are loaded.
    Lexicographic,
    /// Class whose best label cosine against the query embedding is
    /// highest.
    Embedding {
        query: &'a EmbeddingVector<T>,
        store: &'a EmbeddingStore<T>,
    },
}

pub fn select_type<T: Scalar>(entity: &Term, graph: &KnowledgeGraph, choice: TypeChoice<'_, T>) -> Option<Term> {
    let classes = graph.types_of(entity);
    if classes.len() <= 1 {
        return classes.into_iter().next();
    }
    let TypeChoice::Embedding { query, store } = choice else {
        return classes.into_iter().next();
    };
    let mut best: Option<(T, usize)> = None;
    for (i, class) in classes.iter().enumerate() {
        let score = graph
            .labels_of(class)
            .iter()
            .filter_map(|l| store.lookup(l))
            .filter_map(|v| cosine(query, v).ok())
            .fold(None, |acc: Option<T>, c| Some(acc.map_or(c, |a| a.max(c))));
        if let Some(score) = score {
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, i));
            }
        }
    }
    let index = best.map_or(0, |(_, i)| i);
    Some(classes[index].clone())
}

/// Every triple the anchor occurs in, annotated with its position and the
/// selected types of the other IRI or blank endpoints.
pub fn extract_unary<T: Scalar>(anchor: &Term, graph: &KnowledgeGraph, choice: TypeChoice<'_, T>) -> Vec<TripleSubgraph> {
    let mut out = Vec::new();
    let annotate = |t: &Term| (!t.is_literal()).then(|| select_type(t, graph, choice)).flatten();
    for triple in graph.match_pattern(Some(anchor), None, None) {
        let object_type = if triple.predicate.is_rdf_type() {
            None
        } else {
            annotate(&triple.object)
        };
        out.push(TripleSubgraph {
            subject_type: annotate(&triple.subject),
            object_type,
            triple,
            anchor: AnchorPosition::Subject,
        });
    }
    for triple in graph.match_pattern(None, None, Some(anchor)) {
        if triple.subject == *anchor {
            continue;
        }
        out.push(TripleSubgraph {
            subject_type: annotate(&triple.subject),
            object_type: annotate(&triple.object),
            triple,
            anchor: AnchorPosition::Object,
        });
    }
    if anchor.is_iri() {
        for triple in graph.match_pattern(None, Some(anchor), None) {
            out.push(TripleSubgraph {
                subject_type: annotate(&triple.subject),
                object_type: annotate(&triple.object),
                triple,
                anchor: AnchorPosition::Predicate,
            });
        }
    }
    out.sort();
    out
}

/// All simple paths of 1 to `max_len` edges between two terms, walking
/// properties in either direction.
///
/// Class membership edges are not walked, and literals only appear as the
/// final endpoint. Paths are ordered by length, then property sequence,
/// then node sequence.
pub fn extract_binary(from: &Term, to: &Term, graph: &KnowledgeGraph, max_len: usize) -> Vec<PathSubgraph> {
    let (Some(start), Some(goal)) = (graph.id(from), graph.id(to)) else {
        return Vec::new();
    };
    if start == goal || max_len == 0 || from.is_literal() {
        return Vec::new();
    }
    let rdf_type = graph.id(&Term::iri(crate::rdf::RDF_TYPE));
    let mut found: Vec<RawPath> = Vec::new();
    let mut nodes = vec![start];
    let mut props: Vec<(TermId, Direction)> = Vec::new();
    dfs(graph, goal, rdf_type, max_len, &mut nodes, &mut props, &mut found);
    let mut paths: Vec<PathSubgraph> = found
        .into_iter()
        .map(|(n, p)| PathSubgraph {
            nodes: n.into_iter().map(|id| graph.term(id).clone()).collect(),
            properties: p.into_iter().map(|(id, d)| (graph.term(id).clone(), d)).collect(),
        })
        .collect();
    paths.sort_by(|a, b| {
        (a.len(), &a.properties, &a.nodes).cmp(&(b.len(), &b.properties, &b.nodes))
    });
    paths
}

type RawPath = (Vec<TermId>, Vec<(TermId, Direction)>);

fn dfs(
    graph: &KnowledgeGraph,
    goal: TermId,
    rdf_type: Option<TermId>,
    max_len: usize,
    nodes: &mut Vec<TermId>,
    props: &mut Vec<(TermId, Direction)>,
    found: &mut Vec<RawPath>,
) {
    let here = *nodes.last().expect("path has a start");
    let forward = graph
        .match_ids(Some(here), None, None)
        .into_iter()
        .map(|[_, p, o]| (p, o, Direction::Forward));
    let inverse = graph
        .match_ids(None, None, Some(here))
        .into_iter()
        .map(|[s, p, _]| (p, s, Direction::Inverse));
    let steps: Vec<_> = forward.chain(inverse).collect();
    for (p, next, dir) in steps {
        if Some(p) == rdf_type || nodes.contains(&next) {
            continue;
        }
        if next == goal {
            props.push((p, dir));
            nodes.push(next);
            found.push((nodes.clone(), props.clone()));
            nodes.pop();
            props.pop();
            continue;
        }
        if props.len() + 1 >= max_len || graph.term(next).is_literal() {
            continue;
        }
        props.push((p, dir));
        nodes.push(next);
        dfs(graph, goal, rdf_type, max_len, nodes, props, found);
        nodes.pop();
        props.pop();
    }
}

/// Labels of a term: the label predicates for IRIs and blank nodes, the
/// trimmed lexical form for literals.
pub fn term_labels(term: &Term, graph: &KnowledgeGraph) -> Vec<String> {
    if term.is_literal() {
        vec![term.value().trim().to_string()]
    } else {
        graph.labels_of(term)
    }
}

fn push_unique(out: &mut Vec<String>, labels: Vec<String>) {
    for l in labels {
        if !out.contains(&l) {
            out.push(l);
        }
    }
}

/// Labels of the three components of a triple subgraph. Endpoint sides
/// include the labels of their selected type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleLabels {
    pub anchor: Option<AnchorPosition>,
    pub subject: Vec<String>,
    pub predicate: Vec<String>,
    pub object: Vec<String>,
}

impl TripleLabels {
    pub fn gather(sg: &TripleSubgraph, graph: &KnowledgeGraph) -> Self {
        let side = |t: &Term, ty: &Option<Term>| {
            let mut out = term_labels(t, graph);
            if let Some(ty) = ty {
                push_unique(&mut out, graph.labels_of(ty));
            }
            out
        };
        TripleLabels {
            anchor: Some(sg.anchor),
            subject: side(&sg.triple.subject, &sg.subject_type),
            predicate: graph.labels_of(&sg.triple.predicate),
            object: side(&sg.triple.object, &sg.object_type),
        }
    }

    /// Labels of the non-anchor components, deduplicated.
    pub fn compared(&self) -> Vec<String> {
        let mut out = Vec::new();
        let anchor = self.anchor;
        if anchor != Some(AnchorPosition::Subject) {
            push_unique(&mut out, self.subject.clone());
        }
        if anchor != Some(AnchorPosition::Predicate) {
            push_unique(&mut out, self.predicate.clone());
        }
        if anchor != Some(AnchorPosition::Object) {
            push_unique(&mut out, self.object.clone());
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathLabels {
    pub nodes: Vec<String>,
    pub properties: Vec<String>,
}

impl PathLabels {
    pub fn gather(path: &PathSubgraph, graph: &KnowledgeGraph) -> Self {
        let mut nodes = Vec::new();
        for n in &path.nodes {
            push_unique(&mut nodes, term_labels(n, graph));
        }
        let mut properties = Vec::new();
        for (p, _) in &path.properties {
            push_unique(&mut properties, graph.labels_of(p));
        }
        PathLabels { nodes, properties }
    }

    pub fn compared(&self) -> Vec<String> {
        let mut out = self.nodes.clone();
        push_unique(&mut out, self.properties.clone());
        out
    }
}
