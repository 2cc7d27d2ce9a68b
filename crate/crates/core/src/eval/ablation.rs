use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    classification_metrics, exmatch, subtoken_metrics, ClassificationCounts, ClassificationReport,
    SuggestionScores,
};
use crate::callgraph::CallGraph;
use crate::context::{ContextBundle, ContextKind};
use crate::corpus::Corpus;
use crate::model::Model;
use crate::subtoken::{recompose, SubToken};
use crate::tasks::{
    build_bundles, check_consistency, corrupt_name, fit, suggest_name, CnnParams, FitConfig, Label,
    PipelineError,
};

/// One column of the ablation table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub contexts: Vec<ContextKind>,
    pub copy: bool,
    pub noncopy: bool,
    pub learn_weights: bool,
}

impl Variant {
    fn full(name: &str) -> Self {
        Variant {
            name: String::from(name),
            contexts: ContextKind::ALL.to_vec(),
            copy: true,
            noncopy: true,
            learn_weights: true,
        }
    }
}

/// Contexts added one at a time (internal, +enclosing, +siblings,
/// +interaction), then the full model without copy, without non-copy and
/// with equal context weights.
pub fn standard_grid() -> Vec<Variant> {
    use ContextKind::*;
    let mut grid = Vec::new();
    for (name, ctx) in [
        ("internal (A)", vec![Internal]),
        ("A+enclosing (B)", vec![Internal, Enclosing]),
        ("B+siblings (C)", vec![Internal, Enclosing, Sibling]),
        (
            "C+interaction (full)",
            vec![Internal, Enclosing, Sibling, Interaction],
        ),
    ] {
        grid.push(Variant {
            contexts: ctx,
            ..Variant::full(name)
        });
    }
    grid.push(Variant {
        copy: false,
        ..Variant::full("full w/o copy")
    });
    grid.push(Variant {
        noncopy: false,
        ..Variant::full("full w/o non-copy")
    });
    grid.push(Variant {
        learn_weights: false,
        ..Variant::full("full equal weights")
    });
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub suggestion: SuggestionScores,
    pub checking: Option<ClassificationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

fn pct(v: f64) -> String {
    alloc::format!("{:.1}%", 100.0 * v)
}

impl AblationReport {
    pub fn row(&self, variant: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    /// Metrics down, variants across, columns padded to equal width.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(String, Vec<String>)> = vec![
            (
                String::from("ExMatch"),
                self.rows
                    .iter()
                    .map(|r| pct(r.suggestion.exmatch_rate))
                    .collect(),
            ),
            (
                String::from("Precision"),
                self.rows
                    .iter()
                    .map(|r| pct(r.suggestion.precision))
                    .collect(),
            ),
            (
                String::from("Recall"),
                self.rows.iter().map(|r| pct(r.suggestion.recall)).collect(),
            ),
            (
                String::from("F-score"),
                self.rows
                    .iter()
                    .map(|r| pct(r.suggestion.f_score))
                    .collect(),
            ),
        ];
        if self.rows.iter().all(|r| r.checking.is_some()) && !self.rows.is_empty() {
            let get = |f: &dyn Fn(&ClassificationReport) -> f64| -> Vec<String> {
                self.rows
                    .iter()
                    .map(|r| pct(f(r.checking.as_ref().expect("checked above"))))
                    .collect()
            };
            lines.push((
                String::from("C precision"),
                get(&|c| c.consistent.precision),
            ));
            lines.push((String::from("C recall"), get(&|c| c.consistent.recall)));
            lines.push((String::from("C F-score"), get(&|c| c.consistent.f_score)));
            lines.push((
                String::from("IC precision"),
                get(&|c| c.inconsistent.precision),
            ));
            lines.push((String::from("IC recall"), get(&|c| c.inconsistent.recall)));
            lines.push((String::from("IC F-score"), get(&|c| c.inconsistent.f_score)));
            lines.push((String::from("Accuracy"), get(&|c| c.accuracy)));
        }
        let first = lines.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let widths: Vec<usize> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                lines
                    .iter()
                    .map(|(_, v)| v[i].len())
                    .max()
                    .unwrap_or(0)
                    .max(r.variant.len())
            })
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:first$}", "");
        for (r, w) in self.rows.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", r.variant);
        }
        out.push('\n');
        for (label, vals) in &lines {
            let _ = write!(out, "{label:first$}");
            for (v, w) in vals.iter().zip(&widths) {
                let _ = write!(out, "  {v:>w$}");
            }
            out.push('\n');
        }
        out
    }
}

/// Top-1 suggestion scores over `(bundle, name)` pairs. A method with no
/// suggestion scores 0 on every metric.
pub fn suggestion_scores(
    model: &Model,
    data: &[(ContextBundle, Vec<SubToken>)],
) -> SuggestionScores {
    let (mut p, mut r, mut f, mut x) = (0.0, 0.0, 0.0, 0usize);
    for (b, name) in data {
        let expected = recompose(name);
        if let Some(top) = suggest_name(b, model, 1).first() {
            if let Ok(m) = subtoken_metrics(&expected, &top.rendered) {
                p += m.precision;
                r += m.recall;
                f += m.f_score;
            }
            x += usize::from(exmatch(&expected, &top.rendered));
        }
    }
    let n = data.len().max(1) as f64;
    SuggestionScores {
        precision: p / n,
        recall: r / n,
        f_score: f / n,
        exmatch_rate: x as f64 / n,
        count: data.len(),
    }
}

/// Checks every original name (consistent) and one corrupted copy of it
/// (inconsistent) drawn with `seed`.
pub fn checking_counts(
    model: &Model,
    cnn: &CnnParams,
    data: &[(ContextBundle, Vec<SubToken>)],
    seed: u64,
) -> ClassificationCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = ClassificationCounts::default();
    for (b, name) in data {
        let mut judge = |n: &[SubToken], actual_ic: bool| {
            if let Ok(v) = check_consistency(b, &recompose(n), model, cnn) {
                counts.record(actual_ic, v.label == Label::Inconsistent);
            }
        };
        judge(name, false);
        if let Some(bad) = corrupt_name(name, &model.vocab, &mut rng) {
            judge(&bad, true);
        }
    }
    counts
}

/// Trains one model per variant on `corpus` and scores it on the same
/// methods. The classifier is trained and scored only when `base.cnn` is
/// set.
pub fn ablation_run(
    corpus: &Corpus,
    base: &FitConfig,
    grid: &[Variant],
) -> Result<AblationReport, PipelineError> {
    let graph = CallGraph::build(corpus);
    let data: Vec<(ContextBundle, Vec<SubToken>)> = build_bundles(corpus, &graph, base.mode)
        .into_iter()
        .zip(&corpus.methods)
        .filter(|(_, m)| !m.name_subtokens.is_empty())
        .map(|(b, m)| (b, m.name_subtokens.clone()))
        .collect();
    let mut rows = Vec::with_capacity(grid.len());
    for v in grid {
        let mut cfg = base.clone();
        cfg.model.contexts = v.contexts.clone();
        cfg.model.copy = v.copy;
        cfg.model.noncopy = v.noncopy;
        cfg.model.learn_weights = v.learn_weights;
        let fitted = fit(corpus, &cfg)?;
        let suggestion = suggestion_scores(&fitted.model, &data);
        let checking = fitted.cnn.as_ref().map(|cnn| {
            classification_metrics(&checking_counts(
                &fitted.model,
                cnn,
                &data,
                base.seed.wrapping_add(11),
            ))
        });
        rows.push(AblationRow {
            variant: v.name.clone(),
            suggestion,
            checking,
        });
    }
    Ok(AblationReport { rows })
}
