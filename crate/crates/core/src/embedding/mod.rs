//! Sub-token vocabulary, co-occurrence counting, GloVe training and
//! token ↔ vector lookup.

mod cooccur;
mod glove;
mod vocab;

use alloc::vec::Vec;

pub use cooccur::{build_cooccurrence, CooccurrenceTable};
pub use glove::{glove_gradient, glove_objective, train_embeddings, GloveConfig, GloveParams};
pub use vocab::{TokenId, Vocabulary, SPECIAL_TOKENS};

use crate::context::TokenSeq;
use crate::linalg::{dot, norm, Matrix};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("fewer than two distinct tokens to embed")]
    DegenerateCorpus,
    #[error("embedding dimension {0} is below 2")]
    Dimension(usize),
    #[error("token id {0} is outside the vocabulary")]
    TokenOutOfRange(u32),
    #[error("embedding rows must be finite and the PAD row zero")]
    InvalidMatrix,
}

/// One row per token id. Row 0 (PAD) is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: Matrix,
}

impl EmbeddingMatrix {
    pub fn new(rows: Matrix) -> Result<Self, EmbeddingError> {
        if rows.rows < SPECIAL_TOKENS.len()
            || rows.cols < 2
            || rows.row(0).iter().any(|v| *v != 0.0)
            || rows.data.iter().any(|v| !v.is_finite())
        {
            return Err(EmbeddingError::InvalidMatrix);
        }
        Ok(EmbeddingMatrix { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.cols
    }

    pub fn len(&self) -> usize {
        self.rows.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.rows == 0
    }

    pub fn row(&self, id: TokenId) -> &[f64] {
        self.rows.row(id.index())
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rows
    }

    /// Non-special row with the highest cosine similarity to `v`; the lowest
    /// id wins ties. Zero rows score 0.
    pub fn nearest(&self, v: &[f64]) -> TokenId {
        let vn = norm(v);
        let mut best = (TokenId(SPECIAL_TOKENS.len() as u32), f64::NEG_INFINITY);
        for r in SPECIAL_TOKENS.len()..self.rows.rows {
            let row = self.rows.row(r);
            let denom = vn * norm(row);
            let cos = if denom > 0.0 {
                dot(v, row) / denom
            } else {
                0.0
            };
            if cos > best.1 {
                best = (TokenId(r as u32), cos);
            }
        }
        best.0
    }
}

/// Vectors of a padded sequence in order; PAD gives the zero row and
/// unknown tokens the UNK row.
pub fn embed_sequence(seq: &TokenSeq, vocab: &Vocabulary, e: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    seq.tokens
        .iter()
        .map(|s| e.row(vocab.slot_id(s)).to_vec())
        .collect()
}

/// Token text of the row nearest to `v`.
pub fn nearest_token<'v>(v: &[f64], vocab: &'v Vocabulary, e: &EmbeddingMatrix) -> &'v str {
    vocab.token(e.nearest(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{pad_truncate, Slot};
    use crate::subtoken::SubToken;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[&[f64]]) -> EmbeddingMatrix {
        let cols = rows[0].len();
        EmbeddingMatrix::new(Matrix::from_vec(rows.len(), cols, rows.concat())).unwrap()
    }

    #[test]
    fn pad_and_unknown_lookup() {
        let vocab = Vocabulary::build(["get", "size"], 1);
        let e = matrix(&[
            &[0.0, 0.0],
            &[0.1, 0.2],
            &[0.3, 0.3],
            &[1.0, 0.0],
            &[0.0, 1.0],
        ]);
        let seq = TokenSeq::from_tokens(vec![
            SubToken::new("size").unwrap(),
            SubToken::new("held").unwrap(),
        ]);
        let out = embed_sequence(&pad_truncate(&seq, 4), &vocab, &e);
        assert_eq!(
            out,
            vec![
                vec![0.0, 1.0],
                vec![0.1, 0.2],
                vec![0.0, 0.0],
                vec![0.0, 0.0]
            ]
        );
        let pads = TokenSeq {
            tokens: vec![Slot::Pad, Slot::Pad],
            true_length: 0,
        };
        assert_eq!(embed_sequence(&pads, &vocab, &e), vec![vec![0.0; 2]; 2]);
    }

    #[test]
    fn nearest_self_and_ties() {
        let vocab = Vocabulary::build(["get", "set", "put"], 1);
        let e = matrix(&[
            &[0.0, 0.0],
            &[0.0, 0.0],
            &[0.0, 0.0],
            &[1.0, 0.0],
            &[0.0, 1.0],
            &[-1.0, 0.0],
        ]);
        assert_eq!(nearest_token(&[1.0, 0.0], &vocab, &e), "get");
        assert_eq!(nearest_token(&[0.5, 0.5], &vocab, &e), "get");
        assert_eq!(nearest_token(&[-3.0, 0.1], &vocab, &e), "set");
    }

    #[test]
    fn bad_matrices_rejected() {
        let bad_pad = Matrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            EmbeddingMatrix::new(bad_pad).unwrap_err(),
            EmbeddingError::InvalidMatrix
        );
        let nan = Matrix::from_vec(3, 2, vec![0.0, 0.0, f64::NAN, 0.0, 0.0, 0.0]);
        assert!(EmbeddingMatrix::new(nan).is_err());
    }

    fn brute_nearest(v: &[f64], e: &EmbeddingMatrix) -> usize {
        let cos = |r: &[f64]| {
            let d: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            let n = libm::sqrt(v.iter().map(|a| a * a).sum::<f64>())
                * libm::sqrt(r.iter().map(|a| a * a).sum::<f64>());
            if n > 0.0 {
                d / n
            } else {
                0.0
            }
        };
        let mut best = 3;
        for r in 4..e.len() {
            if cos(e.row(TokenId(r as u32))) > cos(e.row(TokenId(best as u32))) {
                best = r;
            }
        }
        best
    }

    proptest! {
        #[test]
        fn nearest_matches_scan(seed in 0u64..1000, n in 4usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = Matrix::uniform(n, 5, 1.0, &mut rng);
            m.row_mut(0).iter_mut().for_each(|v| *v = 0.0);
            let e = EmbeddingMatrix::new(m).unwrap();
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            prop_assert_eq!(e.nearest(&v).index(), brute_nearest(&v, &e));
            for r in 3..n {
                prop_assert_eq!(e.nearest(e.row(TokenId(r as u32))).index(), r);
            }
        }
    }
}
