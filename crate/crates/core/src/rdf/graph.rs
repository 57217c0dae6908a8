use super::parse::{parse_document, Syntax};
use super::term::{split_identifier, Term, Triple, RDF_TYPE};
use std::collections::{BTreeSet, HashMap};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

pub const SKOS_PREF_LABEL: &str = "http://www.w3.org/2004/02/skos/core#prefLabel";
pub const SKOS_ALT_LABEL: &str = "http://www.w3.org/2004/02/skos/core#altLabel";
pub const SKOSXL_LITERAL_FORM: &str = "http://www.w3.org/2008/05/skos-xl#literalForm";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const RDFS_COMMENT: &str = "http://www.w3.org/2000/01/rdf-schema#comment";

pub fn default_label_predicates() -> Vec<String> {
    [
        SKOS_PREF_LABEL,
        SKOS_ALT_LABEL,
        SKOSXL_LITERAL_FORM,
        RDFS_LABEL,
        RDFS_COMMENT,
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum RdfError {
    #[error("{}:{line}: {reason}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: unsupported RDF syntax (expected .nt or .ttl)", .0.display())]
    UnsupportedSyntax(PathBuf),
}

/// Dense id of a term inside one graph. Ids follow term order, so sorting
/// id tuples sorts the underlying terms lexicographically.
pub type TermId = u32;

type Key = [TermId; 3];

/// An immutable triple store with SPO, POS and OSP indexes.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    spo: BTreeSet<Key>,
    pos: BTreeSet<Key>,
    osp: BTreeSet<Key>,
    label_predicates: Vec<String>,
    label_predicate_ids: Vec<TermId>,
}

fn prefix_range(a: Option<TermId>, b: Option<TermId>) -> RangeInclusive<Key> {
    match (a, b) {
        (Some(a), Some(b)) => [a, b, 0]..=[a, b, TermId::MAX],
        (Some(a), None) => [a, 0, 0]..=[a, TermId::MAX, TermId::MAX],
        _ => [0, 0, 0]..=[TermId::MAX; 3],
    }
}

impl KnowledgeGraph {
    /// Loads and merges RDF files. The parser is picked by extension.
    pub fn load<P: AsRef<Path>>(paths: &[P], label_predicates: &[String]) -> Result<Self, RdfError> {
        let mut triples = Vec::new();
        for (index, path) in paths.iter().enumerate() {
            let path = path.as_ref();
            let syntax = path
                .extension()
                .and_then(|e| e.to_str())
                .and_then(Syntax::from_extension)
                .ok_or_else(|| RdfError::UnsupportedSyntax(path.to_path_buf()))?;
            let text = std::fs::read_to_string(path).map_err(|source| RdfError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let parsed = parse_document(&text, syntax, &format!("f{index}")).map_err(|e| RdfError::Parse {
                file: path.to_path_buf(),
                line: e.line,
                reason: e.reason,
            })?;
            log::debug!("{}: {} statements", path.display(), parsed.len());
            triples.extend(parsed);
        }
        Ok(Self::from_triples(triples, label_predicates))
    }

    /// Loads a directory or a single file. Directories contribute every
    /// `.nt`/`.ttl` file, in file name order.
    pub fn load_path(path: &Path, label_predicates: &[String]) -> Result<Self, RdfError> {
        if path.is_dir() {
            let io = |source| RdfError::Io {
                path: path.to_path_buf(),
                source,
            };
            let mut files = Vec::new();
            for entry in std::fs::read_dir(path).map_err(io)? {
                let p = entry.map_err(io)?.path();
                if p.extension().and_then(|e| e.to_str()).and_then(Syntax::from_extension).is_some() {
                    files.push(p);
                }
            }
            files.sort();
            Self::load(&files, label_predicates)
        } else {
            Self::load(&[path], label_predicates)
        }
    }

    pub fn from_triples<I: IntoIterator<Item = Triple>>(triples: I, label_predicates: &[String]) -> Self {
        let triples: BTreeSet<Triple> = triples.into_iter().collect();
        let mut terms: Vec<Term> = triples
            .iter()
            .flat_map(|t| [&t.subject, &t.predicate, &t.object])
            .cloned()
            .collect();
        terms.sort();
        terms.dedup();
        let ids: HashMap<Term, TermId> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        let mut spo = BTreeSet::new();
        let mut pos = BTreeSet::new();
        let mut osp = BTreeSet::new();
        for t in &triples {
            let (s, p, o) = (ids[&t.subject], ids[&t.predicate], ids[&t.object]);
            spo.insert([s, p, o]);
            pos.insert([p, o, s]);
            osp.insert([o, s, p]);
        }
        let label_predicate_ids = label_predicates
            .iter()
            .filter_map(|lp| ids.get(&Term::iri(lp.as_str())).copied())
            .collect();
        KnowledgeGraph {
            terms,
            ids,
            spo,
            pos,
            osp,
            label_predicates: label_predicates.to_vec(),
            label_predicate_ids,
        }
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn label_predicates(&self) -> &[String] {
        &self.label_predicates
    }

    pub fn id(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id as usize]
    }

    pub fn contains_term(&self, term: &Term) -> bool {
        self.ids.contains_key(term)
    }

    pub fn contains(&self, t: &Triple) -> bool {
        match (self.id(&t.subject), self.id(&t.predicate), self.id(&t.object)) {
            (Some(s), Some(p), Some(o)) => self.spo.contains(&[s, p, o]),
            _ => false,
        }
    }

    fn decode(&self, [s, p, o]: Key) -> Triple {
        Triple {
            subject: self.term(s).clone(),
            predicate: self.term(p).clone(),
            object: self.term(o).clone(),
        }
    }

    /// All triples in subject, predicate, object order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|&k| self.decode(k))
    }

    /// Index-level pattern match returning `[s, p, o]` ids in SPO order.
    pub fn match_ids(&self, s: Option<TermId>, p: Option<TermId>, o: Option<TermId>) -> Vec<Key> {
        let mut out: Vec<Key> = match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                if self.spo.contains(&[s, p, o]) {
                    vec![[s, p, o]]
                } else {
                    Vec::new()
                }
            }
            (Some(_), _, None) | (None, None, None) => {
                return self.spo.range(prefix_range(s, p)).copied().collect();
            }
            (None, Some(_), _) => self
                .pos
                .range(prefix_range(p, o))
                .map(|&[p, o, s]| [s, p, o])
                .collect(),
            (_, None, Some(_)) => self
                .osp
                .range(prefix_range(o, s))
                .map(|&[o, s, p]| [s, p, o])
                .collect(),
        };
        out.sort_unstable();
        out
    }

    /// Number of triples matching a pattern, without materialising them
    /// when a single index prefix answers it.
    pub fn count_ids(&self, s: Option<TermId>, p: Option<TermId>, o: Option<TermId>) -> usize {
        match (s, p, o) {
            (Some(_), _, None) | (None, None, None) => self.spo.range(prefix_range(s, p)).count(),
            (None, Some(_), _) => self.pos.range(prefix_range(p, o)).count(),
            (_, None, Some(_)) => self.osp.range(prefix_range(o, s)).count(),
            (Some(s), Some(p), Some(o)) => usize::from(self.spo.contains(&[s, p, o])),
        }
    }

    /// Triples matching every bound position, in lexicographic order.
    /// Terms unknown to the graph match nothing.
    pub fn match_pattern(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        let lookup = |t: Option<&Term>| match t {
            None => Some(None),
            Some(t) => self.id(t).map(Some),
        };
        let (Some(s), Some(p), Some(o)) = (lookup(s), lookup(p), lookup(o)) else {
            return Vec::new();
        };
        self.match_ids(s, p, o).into_iter().map(|k| self.decode(k)).collect()
    }

    /// Literal labels of an entity, in label predicate priority order and
    /// lexicographic within one predicate. Falls back to the split,
    /// lowercased local name, so the result is never empty.
    pub fn labels_of(&self, entity: &Term) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        if let Some(e) = self.id(entity) {
            for &lp in &self.label_predicate_ids {
                let mut found: Vec<&str> = self
                    .spo
                    .range(prefix_range(Some(e), Some(lp)))
                    .map(|&[_, _, o]| self.term(o))
                    .filter(|t| t.is_literal())
                    .map(Term::value)
                    .collect();
                found.sort_unstable();
                for label in found {
                    if !out.iter().any(|l| l == label) {
                        out.push(label.to_string());
                    }
                }
            }
        }
        if out.is_empty() {
            out.push(fallback_label(entity));
        }
        out
    }

    /// Asserted classes of an entity, sorted.
    pub fn types_of(&self, entity: &Term) -> Vec<Term> {
        let (Some(e), Some(ty)) = (self.id(entity), self.id(&Term::iri(RDF_TYPE))) else {
            return Vec::new();
        };
        self.spo
            .range(prefix_range(Some(e), Some(ty)))
            .map(|&[_, _, o]| self.term(o).clone())
            .filter(|t| !t.is_literal())
            .collect()
    }

    /// Subjects of `rdf:type` statements, sorted and deduplicated.
    pub fn instances(&self) -> Vec<Term> {
        let Some(ty) = self.id(&Term::iri(RDF_TYPE)) else {
            return Vec::new();
        };
        let mut out: Vec<TermId> = self
            .pos
            .range(prefix_range(Some(ty), None))
            .map(|&[_, _, s]| s)
            .collect();
        out.sort_unstable();
        out.dedup();
        out.into_iter().map(|id| self.term(id).clone()).collect()
    }

    /// Every term appearing in the graph, sorted.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
}

fn fallback_label(entity: &Term) -> String {
    let name = if entity.is_blank() {
        // skolemized ids carry a `f<file>.` scope prefix
        entity.value().rsplit('.').next().unwrap_or_default()
    } else {
        entity.local_name()
    };
    let split = split_identifier(name);
    if split.is_empty() {
        entity.value().to_lowercase()
    } else {
        split
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Term {
        Term::iri(s)
    }

    fn t(s: &str, p: &str, o: &str) -> Triple {
        Triple::new(iri(s), iri(p), iri(o))
    }

    #[test]
    fn duplicate_statements_are_merged() {
        let g = KnowledgeGraph::from_triples(vec![t("a", "p", "b"), t("a", "p", "b")], &[]);
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn match_by_subject() {
        let g = KnowledgeGraph::from_triples(vec![t("a", "p", "b"), t("c", "p", "b")], &[]);
        assert_eq!(g.match_pattern(Some(&iri("a")), None, None), vec![t("a", "p", "b")]);
        assert_eq!(g.match_pattern(None, None, None).len(), 2);
        assert_eq!(g.match_pattern(None, None, Some(&iri("b"))).len(), 2);
        assert!(g.match_pattern(Some(&iri("zzz")), None, None).is_empty());
    }

    #[test]
    fn labels_priority_then_lexicographic() {
        let lp = default_label_predicates();
        let e = iri("http://x/e");
        let g = KnowledgeGraph::from_triples(
            vec![
                Triple::new(e.clone(), iri(RDFS_LABEL), Term::literal("zeta")),
                Triple::new(e.clone(), iri(SKOS_PREF_LABEL), Term::literal("beta")),
                Triple::new(e.clone(), iri(SKOS_PREF_LABEL), Term::lang_literal("alpha", "en")),
                Triple::new(e.clone(), iri(RDFS_LABEL), Term::literal("beta")),
            ],
            &lp,
        );
        assert_eq!(g.labels_of(&e), vec!["alpha", "beta", "zeta"]);
    }

    #[test]
    fn labels_fallback_to_local_name() {
        let g = KnowledgeGraph::from_triples(Vec::new(), &default_label_predicates());
        assert_eq!(g.labels_of(&iri("http://x/AcceptedPaper")), vec!["accepted paper"]);
        assert_eq!(g.labels_of(&Term::blank("f0.b1")), vec!["b1"]);
    }

    #[test]
    fn types_and_instances() {
        let g = KnowledgeGraph::from_triples(
            vec![t("x", RDF_TYPE, "B"), t("x", RDF_TYPE, "A"), t("y", RDF_TYPE, "A"), t("x", "p", "y")],
            &[],
        );
        assert_eq!(g.types_of(&iri("x")), vec![iri("A"), iri("B")]);
        assert_eq!(g.instances(), vec![iri("x"), iri("y")]);
        assert!(g.types_of(&iri("A")).is_empty());
    }
}
