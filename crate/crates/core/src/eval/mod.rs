//! Sub-token precision/recall/F, exact match, checking metrics and the
//! context ablation harness.

mod ablation;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use ablation::{
    ablation_run, checking_counts, standard_grid, suggestion_scores, AblationReport, AblationRow,
    Variant,
};

use crate::subtoken::{split_identifier, SubToken};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("name {0:?} has no sub-tokens")]
    EmptyName(String),
    #[error("no pairs to score")]
    NoPairs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

/// Harmonic mean, 0 when both are 0.
pub fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn subtokens(name: &str) -> Result<Vec<SubToken>, EvalError> {
    let t = split_identifier(name);
    if t.is_empty() {
        return Err(EvalError::EmptyName(String::from(name)));
    }
    Ok(t)
}

/// Precision and recall over the case-insensitive sub-token sets of the
/// expected and recommended names.
pub fn subtoken_metrics(expected: &str, recommended: &str) -> Result<Prf, EvalError> {
    let e: BTreeSet<SubToken> = subtokens(expected)?.into_iter().collect();
    let r: BTreeSet<SubToken> = subtokens(recommended)?.into_iter().collect();
    let common = e.intersection(&r).count() as f64;
    let precision = common / r.len() as f64;
    let recall = common / e.len() as f64;
    Ok(Prf {
        precision,
        recall,
        f_score: f_measure(precision, recall),
    })
}

/// Ordered, case-insensitive sub-token equality.
pub fn exmatch(expected: &str, recommended: &str) -> bool {
    split_identifier(expected) == split_identifier(recommended)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuggestionScores {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub exmatch_rate: f64,
    pub count: usize,
}

/// Means of the per-pair metrics over `(expected, recommended)` pairs.
pub fn set_metrics<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<SuggestionScores, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::NoPairs);
    }
    let (mut p, mut r, mut f, mut x) = (0.0, 0.0, 0.0, 0usize);
    for (e, rec) in pairs {
        let m = subtoken_metrics(e.as_ref(), rec.as_ref())?;
        p += m.precision;
        r += m.recall;
        f += m.f_score;
        x += usize::from(exmatch(e.as_ref(), rec.as_ref()));
    }
    let n = pairs.len() as f64;
    Ok(SuggestionScores {
        precision: p / n,
        recall: r / n,
        f_score: f / n,
        exmatch_rate: x as f64 / n,
        count: pairs.len(),
    })
}

/// Checking outcomes with the inconsistent class (IC) as positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ClassificationCounts {
    /// Records one decision. `actual_ic` is the truth, `predicted_ic` the
    /// classifier's answer.
    pub fn record(&mut self, actual_ic: bool, predicted_ic: bool) {
        match (actual_ic, predicted_ic) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// Set when precision or recall had a zero denominator and was
    /// reported as 0.
    pub undefined: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub inconsistent: ClassMetrics,
    pub consistent: ClassMetrics,
    pub accuracy: f64,
    pub undefined_accuracy: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn class_metrics(hit: u64, false_pos: u64, false_neg: u64) -> ClassMetrics {
    let (precision, a) = ratio(hit, hit + false_pos);
    let (recall, b) = ratio(hit, hit + false_neg);
    ClassMetrics {
        precision,
        recall,
        f_score: f_measure(precision, recall),
        undefined: a || b,
    }
}

/// IC precision `TP/(TP+FP)`, IC recall `TP/(TP+FN)`; C precision
/// `TN/(TN+FN)`, C recall `TN/(TN+FP)`; accuracy `(TP+TN)/total`.
pub fn classification_metrics(c: &ClassificationCounts) -> ClassificationReport {
    let (accuracy, undefined_accuracy) = ratio(c.tp + c.tn, c.total());
    ClassificationReport {
        inconsistent: class_metrics(c.tp, c.fp, c.fn_),
        consistent: class_metrics(c.tn, c.fn_, c.fp),
        accuracy,
        undefined_accuracy,
    }
}

/// Inclusive line-count range; `max: None` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeBucket {
    pub min: u32,
    pub max: Option<u32>,
}

impl SizeBucket {
    pub fn contains(&self, lines: u32) -> bool {
        lines >= self.min && self.max.is_none_or(|m| lines <= m)
    }
}

pub const DEFAULT_BUCKETS: [SizeBucket; 4] = [
    SizeBucket {
        min: 1,
        max: Some(5),
    },
    SizeBucket {
        min: 6,
        max: Some(10),
    },
    SizeBucket {
        min: 11,
        max: Some(25),
    },
    SizeBucket { min: 26, max: None },
];

/// A scored suggestion with the size of its method.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizedResult {
    pub line_count: u32,
    pub expected: String,
    pub recommended: String,
}

/// Scores per bucket; `None` for buckets with no methods. A method lands
/// in the first bucket containing its size.
pub fn accuracy_by_size(
    results: &[SizedResult],
    buckets: &[SizeBucket],
) -> Result<Vec<(SizeBucket, Option<SuggestionScores>)>, EvalError> {
    let mut groups: Vec<Vec<(&str, &str)>> = buckets.iter().map(|_| Vec::new()).collect();
    for r in results {
        if let Some(i) = buckets.iter().position(|b| b.contains(r.line_count)) {
            groups[i].push((r.expected.as_str(), r.recommended.as_str()));
        }
    }
    buckets
        .iter()
        .zip(groups)
        .map(|(b, g)| {
            Ok((
                *b,
                if g.is_empty() {
                    None
                } else {
                    Some(set_metrics(&g)?)
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests;
