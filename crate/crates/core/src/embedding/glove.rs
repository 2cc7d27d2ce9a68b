use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CooccurrenceTable, EmbeddingError, EmbeddingMatrix, TokenId};
use crate::linalg::{dot, ln, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct GloveConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            dim: 32,
            epochs: 50,
            learning_rate: 0.05,
            x_max: 100.0,
            alpha: 0.75,
            seed: 1,
        }
    }
}

/// Word and context vectors with their biases, one row per token id.
#[derive(Clone, Debug, PartialEq)]
pub struct GloveParams {
    pub word: Matrix,
    pub context: Matrix,
    pub word_bias: Vec<f64>,
    pub context_bias: Vec<f64>,
}

impl GloveParams {
    pub fn random(tokens: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 0.5 / dim as f64;
        GloveParams {
            word: Matrix::uniform(tokens, dim, scale, rng),
            context: Matrix::uniform(tokens, dim, scale, rng),
            word_bias: Matrix::uniform(1, tokens, scale, rng).data,
            context_bias: Matrix::uniform(1, tokens, scale, rng).data,
        }
    }

    fn zeros_like(&self) -> Self {
        GloveParams {
            word: self.word.zeros_like(),
            context: self.context.zeros_like(),
            word_bias: vec![0.0; self.word_bias.len()],
            context_bias: vec![0.0; self.context_bias.len()],
        }
    }

    /// All parameters as one flat list of slices, in a fixed order.
    pub fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.word.data,
            &mut self.context.data,
            &mut self.word_bias,
            &mut self.context_bias,
        ]
    }
}

fn weight(x: f64, cfg: &GloveConfig) -> f64 {
    if x >= cfg.x_max {
        1.0
    } else {
        libm::pow(x / cfg.x_max, cfg.alpha)
    }
}

fn residual(p: &GloveParams, i: TokenId, j: TokenId, x: f64) -> f64 {
    let (i, j) = (i.index(), j.index());
    dot(p.word.row(i), p.context.row(j)) + p.word_bias[i] + p.context_bias[j] - ln(x)
}

/// `Σ f(X_ij) (w_i·w̃_j + b_i + b̃_j − ln X_ij)²`
pub fn glove_objective(p: &GloveParams, table: &CooccurrenceTable, cfg: &GloveConfig) -> f64 {
    table
        .iter()
        .map(|(i, j, x)| {
            let r = residual(p, i, j, x);
            weight(x, cfg) * r * r
        })
        .sum()
}

/// Full gradient of [`glove_objective`].
pub fn glove_gradient(
    p: &GloveParams,
    table: &CooccurrenceTable,
    cfg: &GloveConfig,
) -> GloveParams {
    let mut g = p.zeros_like();
    for (i, j, x) in table.iter() {
        let c = 2.0 * weight(x, cfg) * residual(p, i, j, x);
        let (i, j) = (i.index(), j.index());
        crate::linalg::axpy(c, p.context.row(j), g.word.row_mut(i));
        crate::linalg::axpy(c, p.word.row(i), g.context.row_mut(j));
        g.word_bias[i] += c;
        g.context_bias[j] += c;
    }
    g
}

/// Trains with per-entry AdaGrad steps in a seeded shuffled order and
/// returns `w + w̃` per token (the PAD row zeroed) together with the
/// objective after each epoch.
pub fn train_embeddings(
    table: &CooccurrenceTable,
    tokens: usize,
    cfg: &GloveConfig,
) -> Result<(EmbeddingMatrix, Vec<f64>), EmbeddingError> {
    if cfg.dim < 2 {
        return Err(EmbeddingError::Dimension(cfg.dim));
    }
    if table.distinct_tokens() < 2 {
        return Err(EmbeddingError::DegenerateCorpus);
    }
    if let Some((i, j, _)) = table
        .iter()
        .find(|(i, j, _)| i.index() >= tokens || j.index() >= tokens)
    {
        return Err(EmbeddingError::TokenOutOfRange(i.0.max(j.0)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut p = GloveParams::random(tokens, cfg.dim, &mut rng);
    let mut gsq = p.zeros_like();
    for s in gsq.slices_mut() {
        s.iter_mut().for_each(|v| *v = 1.0);
    }
    let entries: Vec<(TokenId, TokenId, f64)> = table.iter().collect();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    let d = cfg.dim;
    let mut gw = vec![0.0; d];
    let mut gc = vec![0.0; d];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &e in &order {
            let (ti, tj, x) = entries[e];
            let c = 2.0 * weight(x, cfg) * residual(&p, ti, tj, x);
            let (i, j) = (ti.index(), tj.index());
            for k in 0..d {
                gw[k] = c * p.context.data[j * d + k];
                gc[k] = c * p.word.data[i * d + k];
            }
            for k in 0..d {
                let wi = i * d + k;
                p.word.data[wi] -= cfg.learning_rate * gw[k] / libm::sqrt(gsq.word.data[wi]);
                gsq.word.data[wi] += gw[k] * gw[k];
                let cj = j * d + k;
                p.context.data[cj] -= cfg.learning_rate * gc[k] / libm::sqrt(gsq.context.data[cj]);
                gsq.context.data[cj] += gc[k] * gc[k];
            }
            p.word_bias[i] -= cfg.learning_rate * c / libm::sqrt(gsq.word_bias[i]);
            gsq.word_bias[i] += c * c;
            p.context_bias[j] -= cfg.learning_rate * c / libm::sqrt(gsq.context_bias[j]);
            gsq.context_bias[j] += c * c;
        }
        curve.push(glove_objective(&p, table, cfg));
    }
    let mut m = p.word.clone();
    crate::linalg::axpy(1.0, &p.context.data, &mut m.data);
    m.row_mut(TokenId::PAD.index())
        .iter_mut()
        .for_each(|v| *v = 0.0);
    Ok((EmbeddingMatrix::new(m)?, curve))
}
