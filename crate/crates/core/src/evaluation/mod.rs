//! Instance-based evaluation of an alignment: reference queries are
//! rewritten through it and compared on their answers, and each
//! correspondence is checked by comparing the instances of its two sides.

mod metrics;
mod rewrite;

pub use metrics::{compare, qp_qr, query_fmeasure, Comparison};
pub use rewrite::{invert, normalize_row, realize, rewrite};

use crate::alignment::Alignment;
use crate::rdf::{KnowledgeGraph, Term};
use crate::sparql::{evaluate, parse_query, AlignmentQuery, QueryError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

pub type InstanceSet = BTreeSet<Vec<Term>>;

#[derive(Debug, Clone, PartialEq)]
pub struct QueryPair {
    pub id: String,
    pub source: AlignmentQuery,
    pub target: AlignmentQuery,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Query {
        path: PathBuf,
        #[source]
        source: QueryError,
    },
    #[error("query pair `{0}` is missing its {1} query")]
    Unpaired(String, &'static str),
    #[error("query pair `{0}` mixes unary and binary queries")]
    ArityMismatch(String),
}

const SOURCE_SUFFIX: &str = ".source.rq";
const TARGET_SUFFIX: &str = ".target.rq";

/// Reads `<id>.source.rq` / `<id>.target.rq` pairs from a directory,
/// ordered by id.
pub fn load_query_pairs(dir: &Path) -> Result<Vec<QueryPair>, EvalError> {
    let io = |source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: BTreeMap<String, [Option<PathBuf>; 2]> = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if let Some(id) = name.strip_suffix(SOURCE_SUFFIX) {
            files.entry(id.to_string()).or_default()[0] = Some(path);
        } else if let Some(id) = name.strip_suffix(TARGET_SUFFIX) {
            files.entry(id.to_string()).or_default()[1] = Some(path);
        }
    }
    let read = |path: &Path| -> Result<AlignmentQuery, EvalError> {
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        parse_query(&text).map_err(|source| EvalError::Query {
            path: path.to_path_buf(),
            source,
        })
    };
    files
        .into_iter()
        .map(|(id, [s, t])| {
            let s = s.ok_or_else(|| EvalError::Unpaired(id.clone(), "source"))?;
            let t = t.ok_or_else(|| EvalError::Unpaired(id.clone(), "target"))?;
            let (source, target) = (read(&s)?, read(&t)?);
            if source.arity() != target.arity() {
                return Err(EvalError::ArityMismatch(id));
            }
            Ok(QueryPair { id, source, target })
        })
        .collect()
}

/// Answers of a query with literals reduced to their trimmed lexical form.
pub fn instances(query: &AlignmentQuery, graph: &KnowledgeGraph) -> InstanceSet {
    evaluate(query, graph).rows().iter().map(|r| normalize_row(r)).collect()
}

fn all_kinds(eval: &InstanceSet, reference: &InstanceSet) -> BTreeMap<Comparison, f64> {
    Comparison::ALL.iter().map(|&k| (k, compare(k, eval, reference))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestRewriting {
    pub query: Option<AlignmentQuery>,
    pub fmeasure: f64,
    pub answers: InstanceSet,
    /// Query F-measure of every rewriting, in rewriting order.
    pub candidates: Vec<f64>,
}

/// The rewriting whose answers on the target graph have the highest query
/// F-measure against the target reference query; the first one wins ties.
pub fn best_rewriting(pair: &QueryPair, alignment: &Alignment, target: &KnowledgeGraph) -> BestRewriting {
    let reference = instances(&pair.target, target);
    best_against(&pair.source, alignment, target, &reference)
}

fn best_against(
    source: &AlignmentQuery,
    alignment: &Alignment,
    target: &KnowledgeGraph,
    reference: &InstanceSet,
) -> BestRewriting {
    let mut best = BestRewriting {
        query: None,
        fmeasure: 0.0,
        answers: InstanceSet::new(),
        candidates: Vec::new(),
    };
    for q in rewrite(source, alignment) {
        let answers = instances(&q, target);
        let f = query_fmeasure(&answers, reference);
        best.candidates.push(f);
        if best.query.is_none() || f > best.fmeasure {
            best.query = Some(q);
            best.fmeasure = f;
            best.answers = answers;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryScore {
    pub id: String,
    pub best_rewriting: Option<String>,
    pub rewritings: usize,
    pub scores: BTreeMap<Comparison, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorrespondenceScore {
    pub source: String,
    pub target: String,
    pub scores: BTreeMap<Comparison, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationReport {
    pub notes: Vec<String>,
    pub queries: Vec<QueryScore>,
    pub correspondences: Vec<CorrespondenceScore>,
    pub coverage: BTreeMap<Comparison, f64>,
    pub precision: BTreeMap<Comparison, f64>,
}

const NOTES: [&str; 3] = [
    "query-oriented columns average each comparison between the best rewriting and the target reference answers; the best rewriting is always chosen by query F-measure",
    "overlap is the intersection size over the size of the smaller set",
    "classical scores zero when the reference set is empty",
];

fn mean_by_kind<'a>(rows: impl Iterator<Item = &'a BTreeMap<Comparison, f64>>, n: usize) -> BTreeMap<Comparison, f64> {
    let mut sums: BTreeMap<Comparison, f64> = Comparison::ALL.iter().map(|&k| (k, 0.0)).collect();
    for r in rows {
        for (k, v) in r {
            *sums.get_mut(k).expect("all kinds present") += v;
        }
    }
    if n > 0 {
        sums.values_mut().for_each(|v| *v /= n as f64);
    }
    sums
}

pub fn coverage_scores(alignment: &Alignment, pairs: &[QueryPair], target: &KnowledgeGraph) -> Vec<QueryScore> {
    pairs
        .par_iter()
        .map(|pair| {
            let reference = instances(&pair.target, target);
            let best = best_against(&pair.source, alignment, target, &reference);
            QueryScore {
                id: pair.id.clone(),
                best_rewriting: best.query.as_ref().map(|q| q.to_string()),
                rewritings: best.candidates.len(),
                scores: all_kinds(&best.answers, &reference),
            }
        })
        .collect()
}

/// Mean comparison value between best rewritings and reference answers.
pub fn coverage(alignment: &Alignment, pairs: &[QueryPair], target: &KnowledgeGraph, kind: Comparison) -> f64 {
    if pairs.is_empty() {
        log::warn!("coverage over an empty query set");
        return 0.0;
    }
    let scores = coverage_scores(alignment, pairs, target);
    mean_by_kind(scores.iter().map(|s| &s.scores), scores.len())[&kind]
}

/// Each correspondence compares the target side's instances on the target
/// graph with the source side's instances on the source graph. Sides
/// without a pattern form select nothing.
pub fn precision_scores(alignment: &Alignment, source: &KnowledgeGraph, target: &KnowledgeGraph) -> Vec<CorrespondenceScore> {
    let side = |e, g| realize(e).map(|q| instances(&q, g)).unwrap_or_default();
    alignment
        .correspondences
        .par_iter()
        .map(|c| {
            let reference = side(&c.source, source);
            let eval = side(&c.target, target);
            CorrespondenceScore {
                source: c.source.to_string(),
                target: c.target.to_string(),
                scores: all_kinds(&eval, &reference),
            }
        })
        .collect()
}

pub fn precision(alignment: &Alignment, source: &KnowledgeGraph, target: &KnowledgeGraph, kind: Comparison) -> f64 {
    if alignment.correspondences.is_empty() {
        log::warn!("precision of an empty alignment");
        return 0.0;
    }
    let scores = precision_scores(alignment, source, target);
    mean_by_kind(scores.iter().map(|s| &s.scores), scores.len())[&kind]
}

pub fn evaluate_alignment(
    alignment: &Alignment,
    pairs: &[QueryPair],
    source: &KnowledgeGraph,
    target: &KnowledgeGraph,
) -> EvaluationReport {
    let queries = coverage_scores(alignment, pairs, target);
    let correspondences = precision_scores(alignment, source, target);
    if pairs.is_empty() {
        log::warn!("coverage over an empty query set");
    }
    if correspondences.is_empty() {
        log::warn!("precision of an empty alignment");
    }
    EvaluationReport {
        notes: NOTES.iter().map(|s| s.to_string()).collect(),
        coverage: mean_by_kind(queries.iter().map(|s| &s.scores), queries.len()),
        precision: mean_by_kind(correspondences.iter().map(|s| &s.scores), correspondences.len()),
        queries,
        correspondences,
    }
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Two column groups, query oriented and precision oriented.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let width = Comparison::ALL.len() * 8;
        let _ = writeln!(out, "{:<width$} | precision oriented", "query oriented");
        let mut head = String::new();
        for k in Comparison::ALL {
            let _ = write!(head, "{:<8}", k.heading());
        }
        let _ = writeln!(out, "{head} | {}", head.trim_end());
        let row = |m: &BTreeMap<Comparison, f64>| {
            Comparison::ALL
                .iter()
                .map(|k| format!("{:<8.3}", m[k]))
                .collect::<String>()
        };
        let _ = writeln!(out, "{} | {}", row(&self.coverage), row(&self.precision).trim_end());
        out
    }
}
