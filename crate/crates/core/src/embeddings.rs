//! Label embedding cache and the vector operations the similarity
//! settings are built from.
//!
//! Cache format, one record per line:
//!
//! ```text
//! <label>\t<v1> <v2> ... <vN>
//! ```
//!
//! Labels never contain a TAB or a newline. Values are written in the
//! shortest decimal form that parses back to the same number; any decimal
//! or scientific literal is accepted on read.

use crate::scalar::Scalar;
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("{}dimension mismatch: expected {expected}, found {found}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    DimensionMismatch {
        line: Option<usize>,
        expected: usize,
        found: usize,
    },
    #[error("cosine of a zero vector")]
    ZeroVector,
    #[error("mean of no vectors")]
    EmptyInput,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A non-empty vector of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::Format {
                line: 0,
                reason: format!("component {i} is not finite"),
            });
        }
        Ok(EmbeddingVector { values })
    }

    /// Convenience constructor from `f64` literals.
    pub fn from_f64(values: &[f64]) -> Result<Self, EmbeddingError> {
        Self::new(values.iter().map(|&v| T::from_f64_lossy(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn scaled(&self, k: T) -> Self {
        EmbeddingVector {
            values: self.values.iter().map(|&v| v * k).collect(),
        }
    }

    fn dot(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
///
/// The denominator is `sqrt(|a|² |b|²)`, which makes the cosine of a vector
/// with itself exactly one.
pub fn cosine<T: Scalar>(a: &EmbeddingVector<T>, b: &EmbeddingVector<T>) -> Result<T, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            line: None,
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let na = a.dot(a);
    let nb = b.dot(b);
    if na == T::zero() || nb == T::zero() {
        return Err(EmbeddingError::ZeroVector);
    }
    let c = a.dot(b) / (na * nb).sqrt();
    Ok(c.max(-T::one()).min(T::one()))
}

/// Componentwise arithmetic mean.
pub fn mean_pool<T: Scalar>(vs: &[&EmbeddingVector<T>]) -> Result<EmbeddingVector<T>, EmbeddingError> {
    let first = vs.first().ok_or(EmbeddingError::EmptyInput)?;
    let dim = first.dim();
    let mut sum = vec![T::zero(); dim];
    for v in vs {
        if v.dim() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                line: None,
                expected: dim,
                found: v.dim(),
            });
        }
        for (acc, &x) in sum.iter_mut().zip(&v.values) {
            *acc = *acc + x;
        }
    }
    let n = T::from_usize(vs.len()).expect("count fits the scalar type");
    Ok(EmbeddingVector {
        values: sum.into_iter().map(|s| s / n).collect(),
    })
}

/// Immutable label-to-vector map with a fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingStore<T> {
    entries: HashMap<String, EmbeddingVector<T>>,
    dim: usize,
    case_folded: bool,
}

impl<T: Scalar> EmbeddingStore<T> {
    pub fn load(path: &Path, case_fold: bool) -> Result<Self, EmbeddingError> {
        let file = std::fs::File::open(path).map_err(|source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read(BufReader::new(file), case_fold).map_err(|e| match e {
            EmbeddingError::Io { source, .. } => EmbeddingError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn read<R: BufRead>(reader: R, case_fold: bool) -> Result<Self, EmbeddingError> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|source| EmbeddingError::Io {
                path: PathBuf::new(),
                source,
            })?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            let (label, rest) = line.split_once('\t').ok_or_else(|| EmbeddingError::Format {
                line: line_no,
                reason: "missing TAB between label and vector".into(),
            })?;
            let values = rest
                .split_whitespace()
                .map(|tok| match tok.parse::<T>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(EmbeddingError::Format {
                        line: line_no,
                        reason: format!("invalid real {tok:?}"),
                    }),
                })
                .collect::<Result<Vec<T>, _>>()?;
            if values.is_empty() {
                return Err(EmbeddingError::Format {
                    line: line_no,
                    reason: "empty vector".into(),
                });
            }
            records.push((line_no, label.to_string(), EmbeddingVector { values }));
        }
        Self::build(records, case_fold)
    }

    pub fn from_entries<I>(entries: I, case_fold: bool) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, EmbeddingVector<T>)>,
    {
        let records = entries
            .into_iter()
            .enumerate()
            .map(|(i, (k, v))| (i + 1, k, v))
            .collect();
        Self::build(records, case_fold)
    }

    fn build(records: Vec<(usize, String, EmbeddingVector<T>)>, case_fold: bool) -> Result<Self, EmbeddingError> {
        let dim = match records.first() {
            Some((_, _, v)) => v.dim(),
            None => {
                return Err(EmbeddingError::Format {
                    line: 0,
                    reason: "no embedding records".into(),
                })
            }
        };
        let mut entries = HashMap::with_capacity(records.len());
        for (line, label, vector) in records {
            if vector.dim() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    line: Some(line),
                    expected: dim,
                    found: vector.dim(),
                });
            }
            let key = if case_fold { label.to_lowercase() } else { label };
            if entries.contains_key(&key) {
                log::warn!("embedding cache line {line}: duplicate key {key:?}, keeping the first record");
                continue;
            }
            entries.insert(key, vector);
        }
        Ok(EmbeddingStore {
            entries,
            dim,
            case_folded: case_fold,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn case_folded(&self) -> bool {
        self.case_folded
    }

    /// Exact-key lookup; the probe is lowercased when the store is folded.
    pub fn lookup(&self, label: &str) -> Option<&EmbeddingVector<T>> {
        if self.case_folded {
            self.entries.get(&label.to_lowercase())
        } else {
            self.entries.get(label)
        }
    }

    /// Sorted keys.
    pub fn labels(&self) -> Vec<&str> {
        let mut keys: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        keys.sort_unstable();
        keys
    }

    /// Writes all records in key order.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for key in self.labels() {
            out.write_all(key.as_bytes())?;
            out.write_all(b"\t")?;
            let values = &self.entries[key].values;
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    out.write_all(b" ")?;
                }
                write!(out, "{v}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Every vector multiplied by `k`.
    pub fn scaled(&self, k: T) -> Self {
        EmbeddingStore {
            entries: self
                .entries
                .iter()
                .map(|(key, v)| (key.clone(), v.scaled(k)))
                .collect(),
            dim: self.dim,
            case_folded: self.case_folded,
        }
    }
}
