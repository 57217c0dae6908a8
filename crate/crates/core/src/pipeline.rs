//! Query-by-query matching of a source graph against a target graph.

use crate::alignment::{
    aggregate, generalize_binary, generalize_unary, merge, query_expression, Alignment, Candidate, Correspondence,
    Format, Provenance, AGGREGATION_POLICY,
};
use crate::embeddings::{EmbeddingError, EmbeddingStore};
use crate::linking::{default_linking_predicates, LinkConfig, LinkCounts, Linker};
use crate::rdf::{default_label_predicates, KnowledgeGraph, RdfError};
use crate::scalar::Scalar;
use crate::similarity::{query_embedding, Scorer, SimilaritySetting, SubgraphLabels};
use crate::sparql::{evaluate, parse_query, AlignmentQuery, Arity};
use crate::subgraphs::{extract_binary, extract_unary, PathLabels, TripleLabels, TypeChoice};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

pub const DEFAULT_MAX_PATH_LENGTH: usize = 3;
pub const DEFAULT_LINK_THRESHOLD: f64 = 0.85;

/// Matching parameters shared by every query of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchParams {
    pub setting: SimilaritySetting,
    pub instance_embeddings: bool,
    pub link_threshold: f64,
    pub max_path_length: usize,
    /// Defaults to the similarity threshold.
    pub min_score: Option<f64>,
    pub label_predicates: Vec<String>,
    pub linking_predicates: Vec<String>,
}

impl MatchParams {
    pub fn new(setting: SimilaritySetting) -> Self {
        MatchParams {
            setting,
            instance_embeddings: false,
            link_threshold: DEFAULT_LINK_THRESHOLD,
            max_path_length: DEFAULT_MAX_PATH_LENGTH,
            min_score: None,
            label_predicates: default_label_predicates(),
            linking_predicates: default_linking_predicates(),
        }
    }

    pub fn min_score(&self) -> f64 {
        self.min_score.unwrap_or(self.setting.threshold)
    }

    pub fn needs_embeddings(&self) -> bool {
        self.setting.kind.uses_embeddings() || self.instance_embeddings
    }

    pub fn link_config(&self) -> LinkConfig {
        LinkConfig {
            linking_predicates: self.linking_predicates.clone(),
            ignore_case: self.setting.ignore_case,
            link_threshold: self.instance_embeddings.then_some(self.link_threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchRunConfig {
    pub source: PathBuf,
    pub target: PathBuf,
    pub queries: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub out: PathBuf,
    pub params: MatchParams,
    pub formats: Vec<Format>,
}

impl MatchRunConfig {
    pub fn source_id(&self) -> String {
        graph_id(&self.source)
    }

    pub fn target_id(&self) -> String {
        graph_id(&self.target)
    }
}

/// File stem of a graph file, or the directory name.
pub fn graph_id(path: &Path) -> String {
    let stem = if path.is_dir() { path.file_name() } else { path.file_stem() };
    stem.map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into())
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Rdf(#[from] RdfError),
    #[error("embeddings {path}: {source}")]
    Embeddings {
        path: PathBuf,
        #[source]
        source: EmbeddingError,
    },
    #[error("the {0} setting needs an embedding cache")]
    MissingEmbeddings(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Alignment(#[from] crate::alignment::AlignmentError),
}

/// Wall-clock time spent in each step, summed over queries.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepTimings {
    pub parse: Duration,
    pub entities: Duration,
    pub evaluate: Duration,
    pub link: Duration,
    pub extract: Duration,
    pub labels: Duration,
    pub score: Duration,
    pub aggregate: Duration,
    pub serialize: Duration,
}

impl StepTimings {
    pub fn add(&mut self, o: &StepTimings) {
        self.parse += o.parse;
        self.entities += o.entities;
        self.evaluate += o.evaluate;
        self.link += o.link;
        self.extract += o.extract;
        self.labels += o.labels;
        self.score += o.score;
        self.aggregate += o.aggregate;
        self.serialize += o.serialize;
    }

    /// Seconds per step, keyed by step name.
    pub fn seconds(&self) -> BTreeMap<String, f64> {
        [
            ("1-parse", self.parse),
            ("2-entities", self.entities),
            ("3-evaluate", self.evaluate),
            ("4-link", self.link),
            ("5-extract", self.extract),
            ("6-labels", self.labels),
            ("7-score", self.score),
            ("8-aggregate", self.aggregate),
            ("9-serialize", self.serialize),
        ]
        .into_iter()
        .map(|(k, d)| (k.to_string(), d.as_secs_f64()))
        .collect()
    }
}

fn timed<R>(slot: &mut Duration, f: impl FnOnce() -> R) -> R {
    let start = Instant::now();
    let r = f();
    *slot += start.elapsed();
    r
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryOutcome {
    pub correspondences: Vec<Correspondence>,
    pub answers: usize,
    pub linked_rows: usize,
    pub subgraphs: usize,
    pub counts: LinkCounts,
    pub timings: StepTimings,
    pub warning: Option<String>,
}

/// Runs one query through entity labelling, source evaluation, linking,
/// subgraph extraction, scoring and aggregation.
///
/// Queries without answers, without linkable answers, or without a class or
/// property form produce no correspondences and carry a warning instead.
pub fn run_query<T: Scalar>(
    query: &AlignmentQuery,
    source: &KnowledgeGraph,
    target: &KnowledgeGraph,
    store: Option<&EmbeddingStore<T>>,
    linker: &Linker<'_, T>,
    params: &MatchParams,
) -> QueryOutcome {
    let mut out = QueryOutcome::default();
    let t = &mut out.timings;
    let (source_expr, labels) = timed(&mut t.entities, || {
        let mut labels: Vec<String> = Vec::new();
        for e in query.entities() {
            for l in source.labels_of(&e) {
                if !labels.contains(&l) {
                    labels.push(l);
                }
            }
        }
        (query_expression(query), labels)
    });
    let source_expr = match source_expr {
        Ok(e) => e,
        Err(e) => return out.warn(e.to_string()),
    };
    let answers = timed(&mut t.evaluate, || evaluate(query, source));
    out.answers = answers.len();
    if answers.is_empty() {
        return out.warn("query has no answers on the source graph".into());
    }
    let linked = match timed(&mut t.link, || linker.link_all(&answers)) {
        Ok(l) => l,
        Err(e) => return out.warn(e.to_string()),
    };
    out.linked_rows = linked.rows.len();
    out.counts = linked.counts;

    let store = if params.setting.kind.uses_embeddings() { store } else { None };
    let scorer = Scorer::new(params.setting, labels.clone(), store);
    let type_query = store.and_then(|s| query_embedding(&labels, s));
    let choice = match (&type_query, store) {
        (Some(query), Some(store)) => TypeChoice::Embedding { query, store },
        _ => TypeChoice::Lexicographic,
    };

    let t = &mut out.timings;
    let mut candidates = Vec::new();
    for (row, linked_row) in linked.rows.iter().enumerate() {
        let subgraphs: Vec<(SubgraphLabels, crate::alignment::Expression)> = match query.arity() {
            Arity::Unary => {
                let sgs: Vec<_> = timed(&mut t.extract, || {
                    linked_row.links[0]
                        .iter()
                        .flat_map(|l| extract_unary(&l.target, target, choice))
                        .collect()
                });
                timed(&mut t.labels, || {
                    sgs.iter()
                        .map(|sg| (SubgraphLabels::Triple(TripleLabels::gather(sg, target)), generalize_unary(sg)))
                        .filter(|(_, e)| !e.is_property())
                        .collect()
                })
            }
            Arity::Binary => {
                let paths: Vec<_> = timed(&mut t.extract, || {
                    let mut v = Vec::new();
                    for a in &linked_row.links[0] {
                        for b in &linked_row.links[1] {
                            v.extend(extract_binary(&a.target, &b.target, target, params.max_path_length));
                        }
                    }
                    v
                });
                timed(&mut t.labels, || {
                    paths
                        .iter()
                        .map(|p| (SubgraphLabels::Path(PathLabels::gather(p, target)), generalize_binary(p)))
                        .collect()
                })
            }
        };
        out.subgraphs += subgraphs.len();
        timed(&mut t.score, || {
            for (labels, expr) in subgraphs {
                let score = scorer.score(&labels).score;
                candidates.push(Candidate {
                    row,
                    target: expr,
                    score,
                });
            }
        });
    }
    out.correspondences = timed(&mut t.aggregate, || aggregate(&source_expr, &candidates, params.min_score()));
    out
}

impl QueryOutcome {
    fn warn(mut self, message: String) -> Self {
        self.warning = Some(message);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryReport {
    pub id: String,
    pub answers: usize,
    pub linked_rows: usize,
    pub subgraphs: usize,
    pub correspondences: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub source: String,
    pub target: String,
    /// Seconds since the Unix epoch when the run started.
    pub started_at: u64,
    pub config: MatchRunConfig,
    pub queries: Vec<QueryReport>,
    pub link_counts: LinkCounts,
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct PairOutcome {
    pub alignment: Alignment,
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

/// Query files of a directory in name order. Files ending in `.target.rq`
/// are reference queries for evaluation and are skipped.
pub fn query_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let io = |source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.ends_with(".rq") && !name.ends_with(".target.rq") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn query_id(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_suffix(".source.rq")
        .or_else(|| name.strip_suffix(".rq"))
        .unwrap_or(&name)
        .to_string()
}

pub fn load_store<T: Scalar>(params: &MatchParams, path: Option<&Path>) -> Result<Option<EmbeddingStore<T>>, PipelineError> {
    if !params.needs_embeddings() {
        return Ok(None);
    }
    let path = path.ok_or_else(|| PipelineError::MissingEmbeddings(params.setting.kind.to_string()))?;
    EmbeddingStore::load(path, params.setting.ignore_case)
        .map(Some)
        .map_err(|source| PipelineError::Embeddings {
            path: path.to_path_buf(),
            source,
        })
}

/// Loads both graphs and the embedding cache, then runs [`run_pair_with`].
pub fn run_pair<T: Scalar>(cfg: &MatchRunConfig) -> Result<PairOutcome, PipelineError> {
    let source = KnowledgeGraph::load_path(&cfg.source, &cfg.params.label_predicates)?;
    let target = KnowledgeGraph::load_path(&cfg.target, &cfg.params.label_predicates)?;
    let store = load_store::<T>(&cfg.params, cfg.embeddings.as_deref())?;
    run_pair_with(cfg, &source, &target, store.as_ref())
}

/// Matches every query of the configured directory and writes the
/// alignment and a run manifest into the output directory.
pub fn run_pair_with<T: Scalar>(
    cfg: &MatchRunConfig,
    source: &KnowledgeGraph,
    target: &KnowledgeGraph,
    store: Option<&EmbeddingStore<T>>,
) -> Result<PairOutcome, PipelineError> {
    let started_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let params = &cfg.params;
    let mut timings = StepTimings::default();
    let mut queries: Vec<(String, Result<AlignmentQuery, String>)> = Vec::new();
    for path in query_files(&cfg.queries)? {
        let text = fs::read_to_string(&path).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        let parsed = timed(&mut timings.parse, || parse_query(&text)).map_err(|e| {
            log::warn!("{}: {e}", path.display());
            e.to_string()
        });
        queries.push((query_id(&path), parsed));
    }

    let link_config = params.link_config();
    let linker = timed(&mut timings.link, || Linker::new(source, target, store, &link_config));
    let outcomes: Vec<QueryOutcome> = queries
        .par_iter()
        .map(|(id, q)| match q {
            Ok(q) => {
                let o = run_query(q, source, target, store, &linker, params);
                if let Some(w) = &o.warning {
                    log::warn!("query {id}: {w}");
                }
                o
            }
            Err(e) => QueryOutcome::default().warn(e.clone()),
        })
        .collect();

    let mut counts = LinkCounts::default();
    let mut reports = Vec::new();
    for ((id, _), o) in queries.iter().zip(&outcomes) {
        timings.add(&o.timings);
        counts.merge(o.counts);
        reports.push(QueryReport {
            id: id.clone(),
            answers: o.answers,
            linked_rows: o.linked_rows,
            subgraphs: o.subgraphs,
            correspondences: o.correspondences.len(),
            warning: o.warning.clone(),
        });
    }
    let mut alignment = Alignment::new(cfg.source_id(), cfg.target_id());
    alignment.provenance = Some(Provenance {
        setting: params.setting,
        instance_embeddings: params.instance_embeddings,
        link_threshold: params.instance_embeddings.then_some(params.link_threshold),
        min_score: params.min_score(),
        max_path_length: params.max_path_length,
        embeddings: store
            .and(cfg.embeddings.as_ref())
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned()),
        aggregation: AGGREGATION_POLICY.to_string(),
    });
    alignment.correspondences = merge(outcomes.into_iter().map(|o| o.correspondences));

    let outputs = timed(&mut timings.serialize, || alignment.write(&cfg.out, &cfg.formats))?;
    let manifest = RunManifest {
        source: alignment.source.clone(),
        target: alignment.target.clone(),
        started_at,
        config: cfg.clone(),
        queries: reports,
        link_counts: counts,
        timings: timings.seconds(),
        outputs,
    };
    let manifest_path = cfg.out.join(format!("{}.manifest.json", alignment.file_stem()));
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    fs::write(&manifest_path, body).map_err(|source| PipelineError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    Ok(PairOutcome {
        alignment,
        manifest,
        manifest_path,
    })
}
