//! Encoder-decoder over the four contexts: one GRU encoder per context,
//! attention over the pooled encoder states, and an output layer mixing
//! generation, copy and non-copy scores.

mod attention;
mod beam;
mod bigram;
mod gru;
mod step;
mod train;


use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::slice;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use attention::{attend, Attended, AttentionParams};
pub use beam::{beam_decode, Hypothesis};
pub use bigram::{prob_noncopy, BigramStats};
pub use gru::{encode_context, gru_step, EncodedContext, GruParams};
pub use step::{copy_scores, generation_scores, score_new, DecoderState, Memory, StepDistribution};
pub use train::{grad_check, train, GradCheck, TrainConfig};

use crate::context::{ContextBundle, ContextKind};
use crate::embedding::{EmbeddingMatrix, TokenId, Vocabulary};
use crate::linalg::{softplus, Matrix};
use crate::subtoken::SubToken;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("expected input/hidden sizes {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("every attention position is masked")]
    AllMasked,
    #[error("no active contexts configured")]
    NoContexts,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("embedding has {embedding} rows but the vocabulary has {vocab} tokens")]
    VocabularyMismatch { embedding: usize, vocab: usize },
    #[error("loss became non-finite at epoch {epoch}, example {example}")]
    NonFiniteLoss { epoch: usize, example: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub hidden: usize,
    pub attention: usize,
    /// Active contexts, one encoder each, in this order.
    pub contexts: Vec<ContextKind>,
    pub copy: bool,
    pub noncopy: bool,
    /// When false the context weights stay at `1/I`.
    pub learn_weights: bool,
    pub l_max: usize,
    /// Longest generated name in sub-tokens, EON excluded.
    pub max_name_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 64,
            attention: 64,
            contexts: ContextKind::ALL.to_vec(),
            copy: true,
            noncopy: true,
            learn_weights: true,
            l_max: crate::context::DEFAULT_L_MAX,
            max_name_len: 8,
        }
    }
}

/// Initial `θ_NON`; `W_NON = −softplus(θ_NON) ≈ −9e-4`.
pub const INITIAL_THETA_NON: f64 = -7.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParamGroup {
    Encoders,
    Decoder,
    Attention,
    Generation,
    Copy,
    ContextWeights,
    NonCopy,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 7] = [
        ParamGroup::Encoders,
        ParamGroup::Decoder,
        ParamGroup::Attention,
        ParamGroup::Generation,
        ParamGroup::Copy,
        ParamGroup::ContextWeights,
        ParamGroup::NonCopy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Encoders => "encoders",
            ParamGroup::Decoder => "decoder",
            ParamGroup::Attention => "attention",
            ParamGroup::Generation => "generation",
            ParamGroup::Copy => "copy",
            ParamGroup::ContextWeights => "context_weights",
            ParamGroup::NonCopy => "noncopy",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub encoders: Vec<GruParams>,
    pub decoder: GruParams,
    pub attention: AttentionParams,
    /// Generation scores `W_gen [s; C] + b_gen`, one row per vocabulary id.
    pub gen_w: Matrix,
    pub gen_b: Vec<f64>,
    /// Copy projection: position `j` scores `tanh(W_c h_j) · s`.
    pub copy_w: Matrix,
    pub context_weights: Vec<f64>,
    pub theta_non: f64,
}

impl ModelParams {
    pub fn random(cfg: &ModelConfig, embed_dim: usize, vocab_len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = cfg.hidden;
        let encoders = cfg
            .contexts
            .iter()
            .map(|_| GruParams::random(embed_dim, h, &mut rng))
            .collect();
        let decoder = GruParams::random(h + embed_dim, h, &mut rng);
        let attention = AttentionParams::random(h, cfg.attention, &mut rng);
        let gen_w = Matrix::uniform(vocab_len, 2 * h, 1.0 / libm::sqrt(2.0 * h as f64), &mut rng);
        let copy_w = Matrix::uniform(h, h, 1.0 / libm::sqrt(h as f64), &mut rng);
        let i = cfg.contexts.len().max(1);
        ModelParams {
            encoders,
            decoder,
            attention,
            gen_w,
            gen_b: vec![0.0; vocab_len],
            copy_w,
            context_weights: vec![1.0 / i as f64; cfg.contexts.len()],
            theta_non: INITIAL_THETA_NON,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    /// The non-copy weight, always negative.
    pub fn w_non(&self) -> f64 {
        -softplus(self.theta_non)
    }

    pub fn tensors(&self) -> Vec<(ParamGroup, &[f64])> {
        let mut out: Vec<(ParamGroup, &[f64])> = Vec::new();
        for e in &self.encoders {
            out.extend(e.tensors().into_iter().map(|t| (ParamGroup::Encoders, t)));
        }
        out.extend(
            self.decoder
                .tensors()
                .into_iter()
                .map(|t| (ParamGroup::Decoder, t)),
        );
        out.extend(
            self.attention
                .tensors()
                .into_iter()
                .map(|t| (ParamGroup::Attention, t)),
        );
        out.push((ParamGroup::Generation, &self.gen_w.data));
        out.push((ParamGroup::Generation, &self.gen_b));
        out.push((ParamGroup::Copy, &self.copy_w.data));
        out.push((ParamGroup::ContextWeights, &self.context_weights));
        out.push((ParamGroup::NonCopy, slice::from_ref(&self.theta_non)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(ParamGroup, &mut [f64])> {
        let mut out: Vec<(ParamGroup, &mut [f64])> = Vec::new();
        for e in &mut self.encoders {
            out.extend(
                e.tensors_mut()
                    .into_iter()
                    .map(|t| (ParamGroup::Encoders, t)),
            );
        }
        out.extend(
            self.decoder
                .tensors_mut()
                .into_iter()
                .map(|t| (ParamGroup::Decoder, t)),
        );
        out.extend(
            self.attention
                .tensors_mut()
                .into_iter()
                .map(|t| (ParamGroup::Attention, t)),
        );
        out.push((ParamGroup::Generation, &mut self.gen_w.data));
        out.push((ParamGroup::Generation, &mut self.gen_b));
        out.push((ParamGroup::Copy, &mut self.copy_w.data));
        out.push((ParamGroup::ContextWeights, &mut self.context_weights));
        out.push((ParamGroup::NonCopy, slice::from_mut(&mut self.theta_non)));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// One context position: the embedding row it reads and the candidate id a
/// copy from it produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Position {
    pub token: TokenId,
    pub candidate: TokenId,
}

/// A bundle mapped to ids. Tokens outside the vocabulary embed as UNK but
/// stay copyable under extended candidate ids `vocab.len() + k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prepared {
    pub positions: Vec<Vec<Position>>,
    pub extended: Vec<String>,
}

impl Prepared {
    pub fn candidate_count(&self, vocab: &Vocabulary) -> usize {
        vocab.len() + self.extended.len()
    }

    pub fn candidate_text<'a>(&'a self, vocab: &'a Vocabulary, id: TokenId) -> &'a str {
        match id.index().checked_sub(vocab.len()) {
            Some(k) => &self.extended[k],
            None => vocab.token(id),
        }
    }

    /// Candidate ids of a name, truncated to `max_len` and followed by EON.
    /// Sub-tokens that are neither in the vocabulary nor copyable map to UNK.
    pub fn target(&self, vocab: &Vocabulary, name: &[SubToken], max_len: usize) -> Vec<TokenId> {
        let mut out: Vec<TokenId> = name
            .iter()
            .take(max_len)
            .map(|t| {
                vocab.id(t.as_str()).unwrap_or_else(|| {
                    self.extended
                        .iter()
                        .position(|e| e == t.as_str())
                        .map_or(TokenId::UNK, |k| TokenId((vocab.len() + k) as u32))
                })
            })
            .collect();
        out.push(TokenId::EON);
        out
    }
}

/// Trained network plus everything it reads at inference time.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub vocab: Vocabulary,
    pub embedding: EmbeddingMatrix,
    pub stats: BigramStats,
}

/// Training pair: prepared contexts and target candidate ids ending in EON.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub prepared: Prepared,
    pub target: Vec<TokenId>,
}

impl Model {
    pub fn new(
        config: ModelConfig,
        vocab: Vocabulary,
        embedding: EmbeddingMatrix,
        stats: BigramStats,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if config.contexts.is_empty() {
            return Err(ModelError::NoContexts);
        }
        if embedding.len() != vocab.len() {
            return Err(ModelError::VocabularyMismatch {
                embedding: embedding.len(),
                vocab: vocab.len(),
            });
        }
        let params = ModelParams::random(&config, embedding.dim(), vocab.len(), seed);
        Ok(Model {
            config,
            params,
            vocab,
            embedding,
            stats,
        })
    }

    pub fn prepare(&self, bundle: &ContextBundle) -> Prepared {
        let mut extended: Vec<String> = Vec::new();
        let positions = self
            .config
            .contexts
            .iter()
            .map(|&kind| {
                bundle
                    .get(kind)
                    .real()
                    .take(self.config.l_max)
                    .map(|t| match self.vocab.id(t.as_str()) {
                        Some(id) => Position {
                            token: id,
                            candidate: id,
                        },
                        None => {
                            let k = match extended.iter().position(|e| e == t.as_str()) {
                                Some(k) => k,
                                None => {
                                    extended.push(String::from(t.as_str()));
                                    extended.len() - 1
                                }
                            };
                            Position {
                                token: TokenId::UNK,
                                candidate: TokenId((self.vocab.len() + k) as u32),
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        Prepared {
            positions,
            extended,
        }
    }

    pub fn example(&self, bundle: &ContextBundle, name: &[SubToken]) -> Example {
        let prepared = self.prepare(bundle);
        let target = prepared.target(&self.vocab, name, self.config.max_name_len);
        Example { prepared, target }
    }

    /// Embedding row read for a previous-token input; copied
    /// out-of-vocabulary tokens read the UNK row.
    pub(crate) fn input_row(&self, id: TokenId) -> &[f64] {
        if id.index() < self.vocab.len() {
            self.embedding.row(id)
        } else {
            self.embedding.row(TokenId::UNK)
        }
    }

    /// Greedy decoding: the most probable candidate at each step (lowest id
    /// on ties) until EON or `max_name_len` sub-tokens. The returned ids
    /// include the final EON when one was produced.
    pub fn greedy(&self, prepared: &Prepared) -> Vec<TokenId> {
        let mem = self.encode(prepared);
        let mut state = DecoderState::initial(self.config.hidden);
        let mut out = Vec::new();
        for _ in 0..=self.config.max_name_len {
            let (dist, next) = self.decode_step(&mem, &state);
            let best = dist.argmax();
            out.push(best);
            if best == TokenId::EON || out.len() == self.config.max_name_len {
                break;
            }
            state = next.advance(best);
        }
        out
    }
}
