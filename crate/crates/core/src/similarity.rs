//! Scoring of candidate subgraphs against the labels of a query.

use crate::embeddings::{cosine, mean_pool, EmbeddingStore, EmbeddingVector};
use crate::scalar::Scalar;
use crate::subgraphs::{AnchorPosition, PathLabels, TripleLabels};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingKind {
    /// Levenshtein similarity over every query/subgraph label pair.
    Baseline,
    /// Label embedding cosine over every label pair.
    Les,
    /// One pooled query embedding against each subgraph label.
    Esq,
    /// Pooled query embedding against one pooled subgraph embedding.
    Se,
}

impl SettingKind {
    pub const ALL: [SettingKind; 4] = [SettingKind::Baseline, SettingKind::Les, SettingKind::Esq, SettingKind::Se];

    pub fn uses_embeddings(self) -> bool {
        self != SettingKind::Baseline
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SettingKind::Baseline => "baseline",
            SettingKind::Les => "les",
            SettingKind::Esq => "esq",
            SettingKind::Se => "se",
        }
    }
}

impl fmt::Display for SettingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown setting `{0}` (expected baseline, les, esq or se)")]
pub struct UnknownSetting(pub String);

impl FromStr for SettingKind {
    type Err = UnknownSetting;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SettingKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownSetting(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimilaritySetting {
    pub kind: SettingKind,
    pub ignore_case: bool,
    /// Similarities must be strictly greater than this to count.
    pub threshold: f64,
}

impl SimilaritySetting {
    pub fn new(kind: SettingKind, threshold: f64) -> Self {
        SimilaritySetting {
            kind,
            ignore_case: false,
            threshold,
        }
    }
}

/// One label comparison that survived the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Contribution {
    pub query_label: String,
    pub subgraph_label: String,
    pub sim: f64,
}

/// Label used in audit records for pooled embeddings.
pub const POOLED: &str = "<pooled>";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    /// Sum of the contributing similarities; may exceed one.
    pub score: f64,
    pub contributing: Vec<Contribution>,
}

impl Scored {
    fn from_contributions(contributing: Vec<Contribution>) -> Self {
        Scored {
            score: contributing.iter().fold(0.0, |acc, c| acc + c.sim),
            contributing,
        }
    }
}

/// `1 - distance / max(len)` over characters, after trimming and
/// optional lowercasing. Two empty strings are identical.
pub fn levenshtein_sim(a: &str, b: &str, ignore_case: bool) -> f64 {
    let (a, b) = (a.trim(), b.trim());
    if ignore_case {
        strsim::normalized_levenshtein(&a.to_lowercase(), &b.to_lowercase())
    } else {
        strsim::normalized_levenshtein(a, b)
    }
}

pub fn score_baseline(query_labels: &[String], subgraph_labels: &[String], setting: &SimilaritySetting) -> Scored {
    let mut out = Vec::new();
    for q in query_labels {
        for s in subgraph_labels {
            let sim = levenshtein_sim(q, s, setting.ignore_case);
            if sim > setting.threshold {
                out.push(Contribution {
                    query_label: q.clone(),
                    subgraph_label: s.clone(),
                    sim,
                });
            }
        }
    }
    Scored::from_contributions(out)
}

fn cos<T: Scalar>(a: &EmbeddingVector<T>, b: &EmbeddingVector<T>) -> Option<f64> {
    cosine(a, b).ok().map(Scalar::to_f64_lossy)
}

pub fn score_les<T: Scalar>(
    query_labels: &[String],
    subgraph_labels: &[String],
    store: &EmbeddingStore<T>,
    setting: &SimilaritySetting,
) -> Scored {
    let sub: Vec<(&String, &EmbeddingVector<T>)> = subgraph_labels
        .iter()
        .filter_map(|s| store.lookup(s).map(|v| (s, v)))
        .collect();
    let mut out = Vec::new();
    for q in query_labels {
        let Some(qv) = store.lookup(q) else { continue };
        for (s, sv) in &sub {
            match cos(qv, sv) {
                Some(sim) if sim > setting.threshold => out.push(Contribution {
                    query_label: q.clone(),
                    subgraph_label: (*s).clone(),
                    sim,
                }),
                _ => {}
            }
        }
    }
    Scored::from_contributions(out)
}

fn pool<'a, T: Scalar, I>(labels: I, store: &'a EmbeddingStore<T>) -> Option<EmbeddingVector<T>>
where
    I: IntoIterator<Item = &'a String>,
{
    let vs: Vec<&EmbeddingVector<T>> = labels.into_iter().filter_map(|l| store.lookup(l)).collect();
    mean_pool(&vs).ok()
}

/// Mean of the vectors of the query labels that have one.
pub fn query_embedding<T: Scalar>(query_labels: &[String], store: &EmbeddingStore<T>) -> Option<EmbeddingVector<T>> {
    pool(query_labels, store)
}

pub fn score_esq<T: Scalar>(
    query_emb: &EmbeddingVector<T>,
    subgraph_labels: &[String],
    store: &EmbeddingStore<T>,
    setting: &SimilaritySetting,
) -> Scored {
    let out = subgraph_labels
        .iter()
        .filter_map(|s| {
            let sim = cos(query_emb, store.lookup(s)?)?;
            (sim > setting.threshold).then(|| Contribution {
                query_label: POOLED.to_string(),
                subgraph_label: s.clone(),
                sim,
            })
        })
        .collect();
    Scored::from_contributions(out)
}

fn mean_of<T: Scalar>(parts: Vec<Option<EmbeddingVector<T>>>) -> Option<EmbeddingVector<T>> {
    let present: Vec<EmbeddingVector<T>> = parts.into_iter().flatten().collect();
    let refs: Vec<&EmbeddingVector<T>> = present.iter().collect();
    mean_pool(&refs).ok()
}

/// Pooled embedding of the two components that are not the anchor.
/// Endpoint sides already carry their type labels.
pub fn triple_embedding<T: Scalar>(labels: &TripleLabels, store: &EmbeddingStore<T>) -> Option<EmbeddingVector<T>> {
    let s = || pool(&labels.subject, store);
    let p = || pool(&labels.predicate, store);
    let o = || pool(&labels.object, store);
    let parts = match labels.anchor {
        Some(AnchorPosition::Subject) => vec![p(), o()],
        Some(AnchorPosition::Predicate) => vec![s(), o()],
        Some(AnchorPosition::Object) => vec![s(), p()],
        None => vec![s(), p(), o()],
    };
    mean_of(parts)
}

/// Mean of the pooled node labels and the pooled property labels.
pub fn path_embedding<T: Scalar>(labels: &PathLabels, store: &EmbeddingStore<T>) -> Option<EmbeddingVector<T>> {
    mean_of(vec![pool(&labels.nodes, store), pool(&labels.properties, store)])
}

/// The whole subgraph is kept or rejected on a single cosine.
pub fn score_se<T: Scalar>(
    query_emb: &EmbeddingVector<T>,
    subgraph_emb: &EmbeddingVector<T>,
    setting: &SimilaritySetting,
) -> Scored {
    match cos(query_emb, subgraph_emb) {
        Some(sim) if sim > setting.threshold => Scored::from_contributions(vec![Contribution {
            query_label: POOLED.to_string(),
            subgraph_label: POOLED.to_string(),
            sim,
        }]),
        _ => Scored::default(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubgraphLabels {
    Triple(TripleLabels),
    Path(PathLabels),
}

impl SubgraphLabels {
    pub fn compared(&self) -> Vec<String> {
        match self {
            SubgraphLabels::Triple(t) => t.compared(),
            SubgraphLabels::Path(p) => p.compared(),
        }
    }
}

/// Query side of the comparison, prepared once per query.
pub struct Scorer<'a, T: Scalar> {
    setting: SimilaritySetting,
    query_labels: Vec<String>,
    query_emb: Option<EmbeddingVector<T>>,
    store: Option<&'a EmbeddingStore<T>>,
}

impl<'a, T: Scalar> Scorer<'a, T> {
    /// Embedding settings without a store, or without any resolvable query
    /// label under ESQ and SE, score everything zero.
    pub fn new(setting: SimilaritySetting, query_labels: Vec<String>, store: Option<&'a EmbeddingStore<T>>) -> Self {
        let query_emb = match (setting.kind, store) {
            (SettingKind::Esq | SettingKind::Se, Some(store)) => query_embedding(&query_labels, store),
            _ => None,
        };
        Scorer {
            setting,
            query_labels,
            query_emb,
            store,
        }
    }

    pub fn setting(&self) -> &SimilaritySetting {
        &self.setting
    }

    pub fn query_embedding(&self) -> Option<&EmbeddingVector<T>> {
        self.query_emb.as_ref()
    }

    pub fn score(&self, labels: &SubgraphLabels) -> Scored {
        let setting = &self.setting;
        match (setting.kind, self.store, self.query_emb.as_ref()) {
            (SettingKind::Baseline, _, _) => score_baseline(&self.query_labels, &labels.compared(), setting),
            (SettingKind::Les, Some(store), _) => score_les(&self.query_labels, &labels.compared(), store, setting),
            (SettingKind::Esq, Some(store), Some(q)) => score_esq(q, &labels.compared(), store, setting),
            (SettingKind::Se, Some(store), Some(q)) => {
                let emb = match labels {
                    SubgraphLabels::Triple(t) => triple_embedding(t, store),
                    SubgraphLabels::Path(p) => path_embedding(p, store),
                };
                emb.map_or_else(Scored::default, |e| score_se(q, &e, setting))
            }
            _ => Scored::default(),
        }
    }
}
