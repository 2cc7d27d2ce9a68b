use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::ModelError;
use crate::linalg::{dot, masked_softmax, tanh, Matrix};

/// One-hidden-layer scorer `e_i = v · tanh(W_q s + W_k h_i + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub w_query: Matrix,
    pub w_key: Matrix,
    pub bias: Vec<f64>,
    pub v: Vec<f64>,
}

impl AttentionParams {
    pub fn zeros(hidden: usize, attn: usize) -> Self {
        AttentionParams {
            w_query: Matrix::zeros(attn, hidden),
            w_key: Matrix::zeros(attn, hidden),
            bias: vec![0.0; attn],
            v: vec![0.0; attn],
        }
    }

    pub fn random<R: Rng>(hidden: usize, attn: usize, rng: &mut R) -> Self {
        let s = 1.0 / libm::sqrt(hidden as f64);
        let sv = 1.0 / libm::sqrt(attn as f64);
        AttentionParams {
            w_query: Matrix::uniform(attn, hidden, s, rng),
            w_key: Matrix::uniform(attn, hidden, s, rng),
            bias: vec![0.0; attn],
            v: Matrix::uniform(1, attn, sv, rng).data,
        }
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [&self.w_query.data, &self.w_key.data, &self.bias, &self.v]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.w_query.data,
            &mut self.w_key.data,
            &mut self.bias,
            &mut self.v,
        ]
    }

    /// `W_k h` for one encoder state; constant across decoder steps.
    pub(crate) fn key(&self, h: &[f64]) -> Vec<f64> {
        self.w_key.mul(h)
    }

    /// Hidden activations `tanh(W_q s + k_i + b)` and scores for each key.
    pub(crate) fn hidden_and_scores(
        &self,
        query: &[f64],
        keys: &[Vec<f64>],
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut q = self.bias.clone();
        self.w_query.mul_add(query, &mut q);
        let hidden: Vec<Vec<f64>> = keys
            .iter()
            .map(|k| q.iter().zip(k).map(|(a, b)| tanh(a + b)).collect())
            .collect();
        let scores = hidden.iter().map(|u| dot(&self.v, u)).collect();
        (hidden, scores)
    }
}

/// Context vector over pooled encoder states.
#[derive(Clone, Debug, PartialEq)]
pub struct Attended {
    pub context: Vec<f64>,
    /// Weight per position; masked positions get 0.
    pub weights: Vec<f64>,
}

/// Attention of decoder state `query` over `states`, softmax restricted to
/// positions with `mask[i]`.
pub fn attend(
    query: &[f64],
    states: &[Vec<f64>],
    mask: &[bool],
    p: &AttentionParams,
) -> Result<Attended, ModelError> {
    let keys: Vec<Vec<f64>> = states.iter().map(|h| p.key(h)).collect();
    let (_, scores) = p.hidden_and_scores(query, &keys);
    let weights = masked_softmax(&scores, mask).ok_or(ModelError::AllMasked)?;
    let mut context = vec![0.0; query.len()];
    for (a, h) in weights.iter().zip(states) {
        crate::linalg::axpy(*a, h, &mut context);
    }
    Ok(Attended { context, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_state_gets_all_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = AttentionParams::random(3, 2, &mut rng);
        let h = vec![vec![0.1, 0.2, 0.3], vec![9.0, 9.0, 9.0]];
        let a = attend(&[0.5, 0.5, 0.5], &h, &[true, false], &p).unwrap();
        assert_eq!(a.weights, [1.0, 0.0]);
        assert_eq!(a.context, h[0]);
    }

    #[test]
    fn equal_scores_uniform() {
        let p = AttentionParams::zeros(2, 2);
        let h = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let a = attend(&[0.3, 0.1], &h, &[true; 3], &p).unwrap();
        for w in &a.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn all_masked_is_an_error() {
        let p = AttentionParams::zeros(2, 2);
        assert_eq!(
            attend(&[0.0, 0.0], &[vec![1.0, 1.0]], &[false], &p),
            Err(ModelError::AllMasked)
        );
    }

    proptest! {
        #[test]
        fn matches_brute_force(seed in 0u64..300, n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (hd, ad) = (3, 4);
            let p = AttentionParams::random(hd, ad, &mut rng);
            let states: Vec<Vec<f64>> = (0..n).map(|_| (0..hd).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
            mask[0] = true;
            let s: Vec<f64> = (0..hd).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = attend(&s, &states, &mask, &p).unwrap();

            let mut e = vec![0.0; n];
            for i in 0..n {
                for a in 0..ad {
                    let mut pre = p.bias[a];
                    for k in 0..hd {
                        pre += p.w_query.data[a * hd + k] * s[k] + p.w_key.data[a * hd + k] * states[i][k];
                    }
                    e[i] += p.v[a] * pre.tanh();
                }
            }
            let z: f64 = (0..n).filter(|&i| mask[i]).map(|i| e[i].exp()).sum();
            let mut total = 0.0;
            for i in 0..n {
                let want = if mask[i] { e[i].exp() / z } else { 0.0 };
                prop_assert!((got.weights[i] - want).abs() < 1e-12);
                total += got.weights[i];
            }
            prop_assert!((total - 1.0).abs() < 1e-9);
            for k in 0..hd {
                let want: f64 = (0..n).map(|i| got.weights[i] * states[i][k]).sum();
                prop_assert!((got.context[k] - want).abs() < 1e-12);
            }
        }
    }
}
