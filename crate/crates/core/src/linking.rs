//! Finding the target instance that corresponds to each source answer.
//!
//! Links are looked up through a cascade: explicit linking predicates,
//! then exact label equality, then (only when enabled) the most similar
//! target instance by label embedding cosine.

use crate::embeddings::{cosine, EmbeddingStore, EmbeddingVector};
use crate::rdf::{KnowledgeGraph, Term};
use crate::scalar::Scalar;
use crate::sparql::AnswerSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

pub const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";
pub const RDFS_SEE_ALSO: &str = "http://www.w3.org/2000/01/rdf-schema#seeAlso";
pub const SKOS_CLOSE_MATCH: &str = "http://www.w3.org/2004/02/skos/core#closeMatch";
pub const SKOS_EXACT_MATCH: &str = "http://www.w3.org/2004/02/skos/core#exactMatch";

pub fn default_linking_predicates() -> Vec<String> {
    [RDFS_SEE_ALSO, OWL_SAME_AS, SKOS_CLOSE_MATCH, SKOS_EXACT_MATCH]
        .into_iter()
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LinkMethod {
    Predicate,
    ExactString,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceLink {
    pub source: Term,
    pub target: Term,
    pub method: LinkMethod,
    /// 1.0 for predicate and string links, the winning cosine otherwise.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub linking_predicates: Vec<String>,
    pub ignore_case: bool,
    /// Enables embedding links; a candidate must strictly exceed it.
    pub link_threshold: Option<f64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            linking_predicates: default_linking_predicates(),
            ignore_case: false,
            link_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinkError {
    #[error("no common instance: none of the {answers} source answers could be linked")]
    NoCommonInstance { answers: usize },
}

/// A source answer row with the links found for each of its positions.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkedRow {
    pub source: Vec<Term>,
    pub links: Vec<Vec<InstanceLink>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkCounts {
    pub predicate: usize,
    pub exact_string: usize,
    pub embedding: usize,
}

impl LinkCounts {
    fn add(&mut self, link: &InstanceLink) {
        match link.method {
            LinkMethod::Predicate => self.predicate += 1,
            LinkMethod::ExactString => self.exact_string += 1,
            LinkMethod::Embedding => self.embedding += 1,
        }
    }

    pub fn merge(&mut self, other: LinkCounts) {
        self.predicate += other.predicate;
        self.exact_string += other.exact_string;
        self.embedding += other.embedding;
    }

    pub fn total(&self) -> usize {
        self.predicate + self.exact_string + self.embedding
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkedAnswers {
    pub rows: Vec<LinkedRow>,
    pub counts: LinkCounts,
}

fn normalize(label: &str, ignore_case: bool) -> String {
    let t = label.trim();
    if ignore_case {
        t.to_lowercase()
    } else {
        t.to_string()
    }
}

/// Linking state for one source/target graph pair.
///
/// Candidate target instances are the subjects of `rdf:type` statements in
/// the target graph, kept in lexicographic order so ties resolve to the
/// smallest IRI.
pub struct Linker<'a, T: Scalar> {
    source: &'a KnowledgeGraph,
    target: &'a KnowledgeGraph,
    store: Option<&'a EmbeddingStore<T>>,
    config: &'a LinkConfig,
    linking_predicates: Vec<Term>,
    candidates: Vec<Term>,
    by_label: HashMap<String, Vec<usize>>,
    by_literal: HashMap<String, Vec<Term>>,
    stacked: Vec<(usize, &'a EmbeddingVector<T>)>,
}

impl<'a, T: Scalar> Linker<'a, T> {
    pub fn new(
        source: &'a KnowledgeGraph,
        target: &'a KnowledgeGraph,
        store: Option<&'a EmbeddingStore<T>>,
        config: &'a LinkConfig,
    ) -> Self {
        let candidates = target.instances();
        let mut by_label: HashMap<String, Vec<usize>> = HashMap::new();
        let mut stacked = Vec::new();
        for (i, c) in candidates.iter().enumerate() {
            for label in target.labels_of(c) {
                if config.link_threshold.is_some() {
                    if let Some(v) = store.and_then(|s| s.lookup(&label)) {
                        stacked.push((i, v));
                    }
                }
                let entry = by_label.entry(normalize(&label, config.ignore_case)).or_default();
                if entry.last() != Some(&i) {
                    entry.push(i);
                }
            }
        }
        let mut by_literal: HashMap<String, Vec<Term>> = HashMap::new();
        for t in target.terms().iter().filter(|t| t.is_literal()) {
            by_literal
                .entry(normalize(t.value(), config.ignore_case))
                .or_default()
                .push(t.clone());
        }
        Linker {
            source,
            target,
            store,
            config,
            linking_predicates: config
                .linking_predicates
                .iter()
                .filter_map(|p| Term::try_iri(p.as_str()).ok())
                .collect(),
            candidates,
            by_label,
            by_literal,
            stacked,
        }
    }

    /// Links stated with a linking predicate in either graph and either
    /// direction, to IRIs that occur in the target graph.
    pub fn by_predicate(&self, src: &Term) -> Vec<InstanceLink> {
        let mut found: BTreeSet<Term> = BTreeSet::new();
        for g in [self.source, self.target] {
            for lp in &self.linking_predicates {
                let forward = g.match_pattern(Some(src), Some(lp), None).into_iter().map(|t| t.object);
                let inverse = g.match_pattern(None, Some(lp), Some(src)).into_iter().map(|t| t.subject);
                for other in forward.chain(inverse) {
                    if other.is_iri() && other != *src && self.target.contains_term(&other) {
                        found.insert(other);
                    }
                }
            }
        }
        found
            .into_iter()
            .map(|target| InstanceLink {
                source: src.clone(),
                target,
                method: LinkMethod::Predicate,
                score: 1.0,
            })
            .collect()
    }

    /// Target instances sharing a trimmed label with the source entity;
    /// literals link to equal target literals.
    pub fn by_string(&self, src: &Term) -> Vec<InstanceLink> {
        let link = |target: Term| InstanceLink {
            source: src.clone(),
            target,
            method: LinkMethod::ExactString,
            score: 1.0,
        };
        if src.is_literal() {
            let mut hits: Vec<Term> = self
                .by_literal
                .get(&normalize(src.value(), self.config.ignore_case))
                .cloned()
                .unwrap_or_default();
            hits.sort();
            return hits.into_iter().map(link).collect();
        }
        let mut hits: BTreeSet<usize> = BTreeSet::new();
        for label in self.source.labels_of(src) {
            if let Some(ids) = self.by_label.get(&normalize(&label, self.config.ignore_case)) {
                hits.extend(ids);
            }
        }
        hits.into_iter().map(|i| link(self.candidates[i].clone())).collect()
    }

    /// The target instance holding the maximum cell of the cross-cosine
    /// matrix between the source labels and every candidate label, if that
    /// maximum strictly exceeds the link threshold.
    pub fn by_embedding(&self, src: &Term) -> Option<InstanceLink> {
        let threshold = T::from_f64_lossy(self.config.link_threshold?);
        let store = self.store?;
        if src.is_literal() {
            return None;
        }
        let source_vectors: Vec<&EmbeddingVector<T>> = self
            .source
            .labels_of(src)
            .iter()
            .filter_map(|l| store.lookup(l))
            .collect();
        let mut best: Option<(T, usize)> = None;
        for &(candidate, tv) in &self.stacked {
            for sv in &source_vectors {
                let Ok(c) = cosine(sv, tv) else { continue };
                // candidates are visited in IRI order, so ties keep the smallest
                let better = match best {
                    None => true,
                    Some((b, bc)) => c > b || (c == b && candidate < bc),
                };
                if better {
                    best = Some((c, candidate));
                }
            }
        }
        let (score, candidate) = best?;
        (score > threshold).then(|| InstanceLink {
            source: src.clone(),
            target: self.candidates[candidate].clone(),
            method: LinkMethod::Embedding,
            score: score.to_f64_lossy(),
        })
    }

    /// Applies the cascade to one source term.
    pub fn link(&self, src: &Term) -> Vec<InstanceLink> {
        let links = self.by_predicate(src);
        if !links.is_empty() {
            return links;
        }
        let links = self.by_string(src);
        if !links.is_empty() {
            return links;
        }
        self.by_embedding(src).into_iter().collect()
    }

    /// Links every position of every answer row. Rows with an unlinked
    /// position are dropped.
    pub fn link_all(&self, answers: &AnswerSet) -> Result<LinkedAnswers, LinkError> {
        let rows: Vec<&Vec<Term>> = answers.rows().iter().collect();
        let linked: Vec<LinkedRow> = rows
            .par_iter()
            .map(|row| LinkedRow {
                source: (*row).clone(),
                links: row.iter().map(|t| self.link(t)).collect(),
            })
            .collect();
        let mut counts = LinkCounts::default();
        let rows: Vec<LinkedRow> = linked
            .into_iter()
            .filter(|r| r.links.iter().all(|l| !l.is_empty()))
            .inspect(|r| r.links.iter().flatten().for_each(|l| counts.add(l)))
            .collect();
        if rows.is_empty() {
            return Err(LinkError::NoCommonInstance { answers: answers.len() });
        }
        Ok(LinkedAnswers { rows, counts })
    }
}
