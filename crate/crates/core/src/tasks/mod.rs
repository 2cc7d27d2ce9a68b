//! The two applications built on a trained model: consistency checking of
//! an existing name and name suggestion.

mod cnn;
mod pipeline;

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cnn::{
    train_cnn, CnnInput, CnnParams, CnnTrainConfig, CONV1_FILTERS, CONV2_FILTERS, KERNEL_WIDTH,
};
pub use pipeline::{build_bundles, fit, FitConfig, Fitted, PipelineError};

use crate::context::ContextBundle;
use crate::embedding::{nearest_token, TokenId, Vocabulary};
use crate::model::{beam_decode, BigramStats, Model};
use crate::subtoken::{recompose, split_identifier, SubToken};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("name has no sub-tokens")]
    EmptyName,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("classifier loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("expected vectors of width {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Unigram and bigram counts of training names, each followed by EON.
/// Sub-tokens outside the vocabulary count as UNK.
pub fn build_bigram_stats(names: &[Vec<SubToken>], vocab: &Vocabulary) -> BigramStats {
    let ids: Vec<Vec<TokenId>> = names
        .iter()
        .map(|n| n.iter().map(|t| vocab.id_or_unk(t.as_str())).collect())
        .collect();
    BigramStats::build(&ids)
}

/// Greedy decoding of a method: the chosen candidate ids (EON excluded)
/// and the embedding row of each.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodRepresentation {
    pub tokens: Vec<TokenId>,
    pub vectors: Vec<Vec<f64>>,
    /// Set when the first decoded token was EON.
    pub empty: bool,
}

pub fn represent_method(bundle: &ContextBundle, model: &Model) -> MethodRepresentation {
    let prepared = model.prepare(bundle);
    let mut tokens = model.greedy(&prepared);
    if tokens.last() == Some(&TokenId::EON) {
        tokens.pop();
    }
    let vectors = tokens
        .iter()
        .map(|t| model.input_row(*t).to_vec())
        .collect();
    let empty = tokens.is_empty();
    MethodRepresentation {
        tokens,
        vectors,
        empty,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Consistent,
    Inconsistent,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Consistent => "consistent",
            Label::Inconsistent => "inconsistent",
        }
    }
}

pub const CONSISTENCY_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyVerdict {
    /// Probability of the consistent class.
    pub score: f64,
    pub label: Label,
}

impl ConsistencyVerdict {
    pub fn from_score(score: f64) -> Self {
        let label = if score >= CONSISTENCY_THRESHOLD {
            Label::Consistent
        } else {
            Label::Inconsistent
        };
        ConsistencyVerdict { score, label }
    }
}

/// Classifier input for a method and a candidate name: the greedy
/// representation and the embedded name, each later padded to the
/// classifier's time axis.
pub fn classifier_input(rep: &MethodRepresentation, name: &[SubToken], model: &Model) -> CnnInput {
    let existing = name
        .iter()
        .map(|t| {
            model
                .embedding
                .row(model.vocab.id_or_unk(t.as_str()))
                .to_vec()
        })
        .collect();
    CnnInput {
        current: rep.vectors.clone(),
        existing,
    }
}

pub fn check_consistency(
    bundle: &ContextBundle,
    existing_name: &str,
    model: &Model,
    cnn: &CnnParams,
) -> Result<ConsistencyVerdict, TaskError> {
    let name = split_identifier(existing_name);
    if name.is_empty() {
        return Err(TaskError::EmptyName);
    }
    let rep = represent_method(bundle, model);
    let probs = cnn.predict(&classifier_input(&rep, &name, model))?;
    Ok(ConsistencyVerdict::from_score(probs[1]))
}

/// A name with a random position replaced by a different non-special
/// vocabulary token, or `None` when no replacement exists.
pub fn corrupt_name<R: Rng>(
    name: &[SubToken],
    vocab: &Vocabulary,
    rng: &mut R,
) -> Option<Vec<SubToken>> {
    if name.is_empty() {
        return None;
    }
    let k = rng.gen_range(0..name.len());
    let pool: Vec<&str> = vocab
        .entries()
        .map(|(t, _)| t)
        .filter(|t| *t != name[k].as_str())
        .collect();
    if pool.is_empty() {
        return None;
    }
    let mut out = name.to_vec();
    out[k] = SubToken::new(pool[rng.gen_range(0..pool.len())])?;
    Some(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub subtokens: Vec<SubToken>,
    pub rendered: String,
    pub score: f64,
}

impl Suggestion {
    pub fn new(subtokens: Vec<SubToken>, score: f64) -> Self {
        let rendered = recompose(&subtokens);
        Suggestion {
            subtokens,
            rendered,
            score,
        }
    }
}

/// Smallest beam used for suggestions.
pub const MIN_BEAM_WIDTH: usize = 10;

/// Top `k` distinct names from beam search with width `max(k, 10)`. Each
/// vocabulary token is rolled back to the nearest non-special embedding
/// row; copied out-of-vocabulary tokens keep their text.
pub fn suggest_name(bundle: &ContextBundle, model: &Model, k: usize) -> Vec<Suggestion> {
    if k == 0 {
        return Vec::new();
    }
    let prepared = model.prepare(bundle);
    let hyps = beam_decode(
        model,
        &prepared,
        k.max(MIN_BEAM_WIDTH),
        model.config.max_name_len,
    );
    let mut out: Vec<Suggestion> = Vec::new();
    for h in hyps {
        let subtokens: Vec<SubToken> = h
            .tokens
            .iter()
            .filter_map(|t| {
                if t.index() < model.vocab.len() {
                    SubToken::new(nearest_token(
                        model.embedding.row(*t),
                        &model.vocab,
                        &model.embedding,
                    ))
                } else {
                    SubToken::new(prepared.candidate_text(&model.vocab, *t))
                }
            })
            .collect();
        if subtokens.is_empty() {
            continue;
        }
        let s = Suggestion::new(subtokens, h.score);
        if out.iter().all(|o| o.rendered != s.rendered) {
            out.push(s);
        }
        if out.len() == k {
            break;
        }
    }
    out
}
