//! TOML run configuration. Every key is optional; command-line flags and
//! `KGALIGN_*` environment variables take precedence.
//!
//! ```toml
//! source = "data/cmt.ttl"
//! target = "data/conference.ttl"
//! queries = "queries/cmt"
//! embeddings = "cache/labels.txt"
//! out = "runs"
//! setting = "les"
//! threshold = 0.5
//!
//! [sweep]
//! thresholds = [0.5, 0.6, 0.7]
//! settings = ["baseline", "les", "esq", "se"]
//! link_thresholds = [0.8, 0.85, 0.9]
//! ie = [false, true]
//!
//! [[pairs]]
//! source = "data/cmt.ttl"
//! target = "data/ekaw.ttl"
//! ```
//!
//! Relative paths are resolved against the directory of the file.

use crate::alignment::Format;
use crate::similarity::SettingKind;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    /// Directory of `<id>.source.rq` / `<id>.target.rq` reference pairs.
    pub references: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub setting: Option<SettingKind>,
    pub ignore_case: Option<bool>,
    pub threshold: Option<f64>,
    pub ie: Option<bool>,
    pub link_threshold: Option<f64>,
    pub max_path_len: Option<usize>,
    pub min_score: Option<f64>,
    pub formats: Option<Vec<Format>>,
    pub label_predicates: Option<Vec<String>>,
    pub linking_predicates: Option<Vec<String>>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub thresholds: Option<Vec<f64>>,
    pub settings: Option<Vec<SettingKind>>,
    pub link_thresholds: Option<Vec<f64>>,
    pub ignore_case: Option<Vec<bool>>,
    pub ie: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub source: PathBuf,
    pub target: PathBuf,
    pub queries: Option<PathBuf>,
    pub references: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = FileConfig::parse(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.resolve(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.source);
        fix(&mut self.target);
        fix(&mut self.queries);
        fix(&mut self.references);
        fix(&mut self.embeddings);
        fix(&mut self.out);
        for pair in &mut self.pairs {
            for p in [&mut pair.source, &mut pair.target] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
            fix(&mut pair.queries);
            fix(&mut pair.references);
        }
    }
}
