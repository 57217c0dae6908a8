use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Ways of comparing an evaluated instance set with a reference set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Comparison {
    /// One when both sets are equal and the reference is nonempty.
    Classical,
    RecallOriented,
    PrecisionOriented,
    /// Intersection size over the smaller set.
    Overlap,
    QueryFMeasure,
}

impl Comparison {
    pub const ALL: [Comparison; 5] = [
        Comparison::Classical,
        Comparison::RecallOriented,
        Comparison::PrecisionOriented,
        Comparison::Overlap,
        Comparison::QueryFMeasure,
    ];

    /// Column heading used in text tables.
    pub fn heading(self) -> &'static str {
        match self {
            Comparison::Classical => "class",
            Comparison::RecallOriented => "rec.",
            Comparison::PrecisionOriented => "prec.",
            Comparison::Overlap => "overlap",
            Comparison::QueryFMeasure => "f-m.",
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.heading())
    }
}

fn common<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|x| large.contains(x)).count()
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// `(QP, QR)`: shared instances over the evaluated set and over the
/// reference set, zero for an empty denominator.
pub fn qp_qr<T: Ord>(eval: &BTreeSet<T>, reference: &BTreeSet<T>) -> (f64, f64) {
    let n = common(eval, reference);
    (ratio(n, eval.len()), ratio(n, reference.len()))
}

pub fn query_fmeasure<T: Ord>(eval: &BTreeSet<T>, reference: &BTreeSet<T>) -> f64 {
    let (qp, qr) = qp_qr(eval, reference);
    if qp + qr == 0.0 {
        0.0
    } else {
        2.0 * qp * qr / (qp + qr)
    }
}

pub fn compare<T: Ord>(kind: Comparison, eval: &BTreeSet<T>, reference: &BTreeSet<T>) -> f64 {
    match kind {
        Comparison::Classical => {
            if !reference.is_empty() && eval == reference {
                1.0
            } else {
                0.0
            }
        }
        Comparison::RecallOriented => qp_qr(eval, reference).1,
        Comparison::PrecisionOriented => qp_qr(eval, reference).0,
        Comparison::Overlap => ratio(common(eval, reference), eval.len().min(reference.len())),
        Comparison::QueryFMeasure => query_fmeasure(eval, reference),
    }
}
