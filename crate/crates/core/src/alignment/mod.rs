//! Complex correspondences built from scored target subgraphs.

mod edoal;
mod expression;

pub use edoal::to_edoal;
pub use expression::{generalize_binary, generalize_unary, query_expression, Expression, ShapeError};

use crate::similarity::SimilaritySetting;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Relation {
    Equivalence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Correspondence {
    pub source: Expression,
    pub target: Expression,
    pub relation: Relation,
    pub confidence: f64,
    /// Number of distinct answer rows whose subgraphs produced the target.
    pub support: usize,
}

/// Run parameters recorded next to the correspondences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub setting: SimilaritySetting,
    pub instance_embeddings: bool,
    pub link_threshold: Option<f64>,
    pub min_score: f64,
    pub max_path_length: usize,
    /// File name of the embedding cache, if one was used.
    pub embeddings: Option<String>,
    /// How scores of one target expression are combined across answers.
    pub aggregation: String,
}

pub const AGGREGATION_POLICY: &str = "sum of subgraph scores divided by the number of supporting answer rows";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Alignment {
    pub source: String,
    pub target: String,
    pub provenance: Option<Provenance>,
    pub correspondences: Vec<Correspondence>,
}

#[derive(Debug, thiserror::Error)]
pub enum AlignmentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Edoal,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "edoal" => Ok(Format::Edoal),
            other => Err(format!("unknown format `{other}` (expected json or edoal)")),
        }
    }
}

/// Confidences are kept to nine decimals so that rounding noise in the
/// arithmetic does not leak into the written alignment.
pub fn quantize(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// One scored candidate: the answer row it came from, its generalized
/// target expression and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub row: usize,
    pub target: Expression,
    pub score: f64,
}

/// Groups candidates by target expression. Support is the number of
/// distinct rows in a group and confidence the score sum over support.
/// Groups at or below `min_score` are dropped, and so are candidates that
/// scored zero.
pub fn aggregate(source: &Expression, candidates: &[Candidate], min_score: f64) -> Vec<Correspondence> {
    let mut groups: BTreeMap<String, (&Expression, f64, Vec<usize>)> = BTreeMap::new();
    for c in candidates.iter().filter(|c| c.score > 0.0) {
        let entry = groups.entry(c.target.to_string()).or_insert((&c.target, 0.0, Vec::new()));
        entry.1 += c.score;
        entry.2.push(c.row);
    }
    let mut out: Vec<Correspondence> = groups
        .into_values()
        .filter_map(|(target, sum, mut rows)| {
            rows.sort_unstable();
            rows.dedup();
            let confidence = quantize(sum / rows.len() as f64);
            (confidence > min_score).then(|| Correspondence {
                source: source.clone(),
                target: target.clone(),
                relation: Relation::Equivalence,
                confidence,
                support: rows.len(),
            })
        })
        .collect();
    sort_correspondences(&mut out);
    out
}

/// Confidence descending, then source and target text.
pub fn sort_correspondences(cs: &mut [Correspondence]) {
    cs.sort_by_cached_key(|c| (std::cmp::Reverse(OrdF64(c.confidence)), c.source.to_string(), c.target.to_string()));
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Unions correspondence lists; for a repeated (source, target) pair the
/// most confident entry is kept.
pub fn merge(lists: impl IntoIterator<Item = Vec<Correspondence>>) -> Vec<Correspondence> {
    let mut best: BTreeMap<(String, String), Correspondence> = BTreeMap::new();
    for c in lists.into_iter().flatten() {
        let key = (c.source.to_string(), c.target.to_string());
        match best.get(&key) {
            Some(old) if old.confidence >= c.confidence => {}
            _ => {
                best.insert(key, c);
            }
        }
    }
    let mut out: Vec<Correspondence> = best.into_values().collect();
    sort_correspondences(&mut out);
    out
}

impl Alignment {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Alignment {
            source: source.into(),
            target: target.into(),
            provenance: None,
            correspondences: Vec::new(),
        }
    }

    /// `source-target-setting-threshold`, or `source-target` without
    /// provenance.
    pub fn file_stem(&self) -> String {
        match &self.provenance {
            Some(p) => format!("{}-{}-{}-{}", self.source, self.target, p.setting.kind, p.setting.threshold),
            None => format!("{}-{}", self.source, self.target),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("alignment serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Writes one file per format into `dir` and returns their paths.
    pub fn write(&self, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, AlignmentError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| AlignmentError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        for format in formats {
            let (ext, body) = match format {
                Format::Json => ("json", self.to_json()),
                Format::Edoal => ("edoal.xml", to_edoal(self)),
            };
            let path = dir.join(format!("{}.{ext}", self.file_stem()));
            fs::write(&path, body).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn read(path: &Path) -> Result<Self, AlignmentError> {
        let text = fs::read_to_string(path).map_err(|source| AlignmentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Alignment::from_json(&text).map_err(|source| AlignmentError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}
