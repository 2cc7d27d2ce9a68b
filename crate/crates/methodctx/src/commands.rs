//! The work behind each subcommand, separate from argument handling.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use methodctx_core::context::{build_bundle, Mode};
use methodctx_core::corpus::SCHEMA_VERSION;
use methodctx_core::eval::{
    ablation_run, accuracy_by_size, set_metrics, standard_grid, AblationReport, SizeBucket,
    SizedResult, SuggestionScores, DEFAULT_BUCKETS,
};
use methodctx_core::tasks::{check_consistency, fit, suggest_name, Label};
use methodctx_core::{CallGraph, Corpus};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoints;
use crate::config::RunConfig;
use crate::corpus_io::{ingest, read_corpus, to_json_line, write_corpus, write_file, Diagnostics};
use crate::error::CliError;

pub const LOSS_LOG_FILE: &str = "loss.log";
pub const RUN_CONFIG_FILE: &str = "run.cfg";

pub fn cmd_ingest(root: &Path, out: &Path) -> Result<Diagnostics, CliError> {
    let ing = ingest(root)?;
    write_corpus(out, &ing)?;
    Ok(ing.diagnostics)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub methods: usize,
    pub vocabulary: usize,
    pub final_loss: Option<f64>,
    pub classifier: bool,
}

/// Trains on the corpus in `corpus_dir` and writes the checkpoints, the
/// per-epoch losses and the effective configuration into `out`.
pub fn cmd_train(corpus_dir: &Path, cfg: &RunConfig, out: &Path) -> Result<TrainSummary, CliError> {
    let corpus = read_corpus(corpus_dir)?;
    let fitted = fit(&corpus, &cfg.fit).map_err(|e| CliError::Runtime(e.to_string()))?;
    let ck = Checkpoints {
        model: fitted.model,
        mode: cfg.fit.mode,
        classifier: fitted.cnn,
    };
    ck.save(out)?;
    let mut log = String::new();
    for (stage, curve) in [
        ("embedding", &fitted.glove_curve),
        ("model", &fitted.model_curve),
        ("classifier", &fitted.cnn_curve),
    ] {
        for (i, loss) in curve.iter().enumerate() {
            let _ = writeln!(log, "{stage} {} {loss}", i + 1);
        }
    }
    write_file(&out.join(LOSS_LOG_FILE), log.as_bytes())?;
    write_file(&out.join(RUN_CONFIG_FILE), cfg.to_text().as_bytes())?;
    Ok(TrainSummary {
        methods: corpus
            .methods
            .iter()
            .filter(|m| !m.name_subtokens.is_empty())
            .count(),
        vocabulary: ck.model.vocab.len(),
        final_loss: fitted.model_curve.last().copied(),
        classifier: ck.classifier.is_some(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub method_id: String,
    pub existing_name: String,
    pub score: f64,
    pub label: Label,
}

/// One verdict per method with a non-empty name, in corpus order.
pub fn cmd_check(
    corpus: &Corpus,
    ck: &Checkpoints,
    mode: Mode,
) -> Result<Vec<CheckRecord>, CliError> {
    let cnn = ck.classifier.as_ref().ok_or_else(|| {
        CliError::Runtime(
            "the checkpoints have no classifier; train with classifier.enabled = true".into(),
        )
    })?;
    let graph = CallGraph::build(corpus);
    let mut out = Vec::new();
    for (i, m) in corpus.methods.iter().enumerate() {
        if m.name_subtokens.is_empty() {
            continue;
        }
        let bundle = build_bundle(corpus, &graph, i, mode);
        let v = check_consistency(&bundle, &m.name, &ck.model, cnn)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        out.push(CheckRecord {
            method_id: m.id.clone(),
            existing_name: m.name.clone(),
            score: v.score,
            label: v.label,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuggestRecord {
    pub method_id: String,
    pub candidates: Vec<Candidate>,
}

/// Up to `k` candidates for every method, in corpus order.
pub fn cmd_suggest(corpus: &Corpus, ck: &Checkpoints, mode: Mode, k: usize) -> Vec<SuggestRecord> {
    let graph = CallGraph::build(corpus);
    (0..corpus.methods.len())
        .map(|i| {
            let bundle = build_bundle(corpus, &graph, i, mode);
            let candidates = suggest_name(&bundle, &ck.model, k)
                .into_iter()
                .map(|s| Candidate {
                    name: s.rendered,
                    score: s.score,
                })
                .collect();
            SuggestRecord {
                method_id: corpus.methods[i].id.clone(),
                candidates,
            }
        })
        .collect()
}

pub fn jsonl<T: Serialize>(records: &[T]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    for r in records {
        out.extend(to_json_line(r)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketScores {
    pub min: u32,
    pub max: Option<u32>,
    pub scores: Option<SuggestionScores>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: u32,
    /// Predictions scored against a gold name.
    pub scored: usize,
    /// Scored predictions without any candidate; they count as 0.
    pub unanswered: usize,
    /// Predictions for methods whose gold name has no sub-tokens.
    pub skipped: usize,
    pub overall: SuggestionScores,
    pub by_size: Vec<BucketScores>,
}

/// Means over `answered` pairs rescaled to include `unanswered` zeros.
fn with_zeros(s: SuggestionScores, unanswered: usize) -> SuggestionScores {
    let n = s.count + unanswered;
    let f = s.count as f64 / n as f64;
    SuggestionScores {
        precision: s.precision * f,
        recall: s.recall * f,
        f_score: s.f_score * f,
        exmatch_rate: s.exmatch_rate * f,
        count: n,
    }
}

fn zeros(count: usize) -> SuggestionScores {
    SuggestionScores {
        precision: 0.0,
        recall: 0.0,
        f_score: 0.0,
        exmatch_rate: 0.0,
        count,
    }
}

/// Scores the top candidate of each prediction against the method's name
/// in `corpus`.
pub fn cmd_eval(predictions: &[SuggestRecord], corpus: &Corpus) -> Result<EvalReport, CliError> {
    let mut answered: Vec<SizedResult> = Vec::new();
    let mut unanswered: Vec<u32> = Vec::new();
    let mut skipped = 0;
    let mut seen = std::collections::BTreeSet::new();
    for p in predictions {
        if !seen.insert(p.method_id.as_str()) {
            return Err(CliError::Runtime(format!(
                "method {} predicted twice",
                p.method_id
            )));
        }
        let i = corpus
            .method_by_id(&p.method_id)
            .ok_or_else(|| CliError::Runtime(format!("unknown method {}", p.method_id)))?;
        let m = &corpus.methods[i];
        if m.name_subtokens.is_empty() {
            skipped += 1;
            continue;
        }
        match p
            .candidates
            .first()
            .filter(|c| !methodctx_core::split_identifier(&c.name).is_empty())
        {
            Some(c) => answered.push(SizedResult {
                line_count: m.line_count,
                expected: m.name.clone(),
                recommended: c.name.clone(),
            }),
            None => unanswered.push(m.line_count),
        }
    }
    if answered.is_empty() && unanswered.is_empty() {
        return Err(CliError::Runtime("no predictions to score".into()));
    }
    let score = |res: &[SizedResult], missing: usize| -> Result<SuggestionScores, CliError> {
        if res.is_empty() {
            return Ok(zeros(missing));
        }
        let pairs: Vec<(&str, &str)> = res
            .iter()
            .map(|r| (r.expected.as_str(), r.recommended.as_str()))
            .collect();
        let s = set_metrics(&pairs).map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok(with_zeros(s, missing))
    };
    let overall = score(&answered, unanswered.len())?;
    let per = accuracy_by_size(&answered, &DEFAULT_BUCKETS)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let by_size = per
        .into_iter()
        .map(|(b, s): (SizeBucket, _)| {
            let missing = unanswered.iter().filter(|l| b.contains(**l)).count();
            let scores = match s {
                Some(s) => Some(with_zeros(s, missing)),
                None if missing > 0 => Some(zeros(missing)),
                None => None,
            };
            BucketScores {
                min: b.min,
                max: b.max,
                scores,
            }
        })
        .collect();
    Ok(EvalReport {
        schema: SCHEMA_VERSION,
        scored: answered.len() + unanswered.len(),
        unanswered: unanswered.len(),
        skipped,
        overall,
        by_size,
    })
}

fn pct(v: f64) -> String {
    format!("{:.1}%", 100.0 * v)
}

impl EvalReport {
    /// One row for all methods and one per size bucket, right-aligned.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<[String; 6]> = vec![[
            "methods".into(),
            "count".into(),
            "ExMatch".into(),
            "Precision".into(),
            "Recall".into(),
            "F-score".into(),
        ]];
        let row = |label: String, s: Option<&SuggestionScores>| -> [String; 6] {
            match s {
                Some(s) => [
                    label,
                    s.count.to_string(),
                    pct(s.exmatch_rate),
                    pct(s.precision),
                    pct(s.recall),
                    pct(s.f_score),
                ],
                None => [
                    label,
                    "0".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                ],
            }
        };
        rows.push(row("all".into(), Some(&self.overall)));
        for b in &self.by_size {
            let label = match b.max {
                Some(m) => format!("{}-{} lines", b.min, m),
                None => format!("{}+ lines", b.min),
            };
            rows.push(row(label, b.scores.as_ref()));
        }
        let widths: Vec<usize> = (0..6)
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let _ = write!(out, "{:<w$}", r[0], w = widths[0]);
            for c in 1..6 {
                let _ = write!(out, "  {:>w$}", r[c], w = widths[c]);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationFile {
    pub schema: u32,
    #[serde(flatten)]
    pub report: AblationReport,
}

/// Trains every variant of the standard grid on the corpus.
pub fn cmd_ablate(corpus: &Corpus, cfg: &RunConfig) -> Result<AblationReport, CliError> {
    ablation_run(corpus, &cfg.fit, &standard_grid()).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn read_predictions(path: &Path) -> Result<Vec<SuggestRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .map_err(|e| CliError::Runtime(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

/// Every method's four contexts as text, one block per method in corpus
/// order: `# <id> (<mode>)` followed by `<context>: <tokens>` lines.
pub fn render_contexts(corpus: &Corpus, mode: Mode) -> String {
    let graph = CallGraph::build(corpus);
    let mut out = String::new();
    for i in 0..corpus.methods.len() {
        let b = build_bundle(corpus, &graph, i, mode);
        let _ = writeln!(out, "# {} ({})", corpus.methods[i].id, mode.name());
        for kind in methodctx_core::ContextKind::ALL {
            let _ = writeln!(
                out,
                "{}: {}",
                kind.name(),
                b.get(kind).real_strs().join(" ")
            );
        }
    }
    out
}
