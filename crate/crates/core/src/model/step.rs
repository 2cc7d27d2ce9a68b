use alloc::vec;
use alloc::vec::Vec;

use super::bigram::noncopy_row;
use super::gru::GruCache;
use super::{Model, Prepared};
use crate::embedding::TokenId;
use crate::linalg::{axpy, dot, exp, tanh};

/// Encoder output for one input, pooled over all active contexts in
/// context order.
#[derive(Clone, Debug, PartialEq)]
pub struct Memory {
    pub(crate) states: Vec<Vec<f64>>,
    /// `W_k h_j`, reused at every decoder step.
    pub(crate) keys: Vec<Vec<f64>>,
    /// `tanh(W_c h_j)`.
    pub(crate) copy_keys: Vec<Vec<f64>>,
    /// Index into the active contexts for each position.
    pub(crate) context_of: Vec<usize>,
    pub(crate) candidate: Vec<TokenId>,
    pub(crate) candidates: usize,
}

impl Memory {
    pub fn positions(&self) -> usize {
        self.states.len()
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderState {
    pub hidden: Vec<f64>,
    pub prev: Option<TokenId>,
}

impl DecoderState {
    pub fn initial(hidden: usize) -> Self {
        DecoderState {
            hidden: vec![0.0; hidden],
            prev: None,
        }
    }

    /// The state for the next step after emitting `token`.
    pub fn advance(self, token: TokenId) -> Self {
        DecoderState {
            hidden: self.hidden,
            prev: Some(token),
        }
    }
}

/// Output distribution over candidate ids (vocabulary ids, then extended
/// copy ids). PAD always has probability 0.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    pub probs: Vec<f64>,
    /// Generation probability per candidate.
    pub generation: Vec<f64>,
    /// Weighted copy probability `Σ W_i p_i` per candidate.
    pub copy: Vec<f64>,
    /// Signed non-copy term `W_NON p_NON` per candidate.
    pub noncopy: Vec<f64>,
    /// Set when every combined score clamped to 0 and `probs` fell back to
    /// uniform.
    pub degenerate: bool,
}

impl StepDistribution {
    pub fn argmax(&self) -> TokenId {
        let mut best = 1;
        for (i, p) in self.probs.iter().enumerate().skip(1) {
            if *p > self.probs[best] {
                best = i;
            }
        }
        TokenId(best as u32)
    }
}

/// Unnormalised generation scores per candidate: `exp(logit)` for
/// vocabulary ids other than PAD (UNK included), 0 for PAD and for
/// extended copy-only ids.
pub fn generation_scores(logits: &[f64], candidates: usize) -> Vec<f64> {
    let mut out = vec![0.0; candidates];
    for (w, l) in logits.iter().enumerate().skip(1) {
        out[w] = exp(*l);
    }
    out
}

/// Unnormalised copy scores per candidate: the sum of `exp(logit_j)` over
/// the positions `j` holding that candidate.
pub fn copy_scores(logits: &[f64], position_candidates: &[TokenId], candidates: usize) -> Vec<f64> {
    let mut out = vec![0.0; candidates];
    for (l, c) in logits.iter().zip(position_candidates) {
        out[c.index()] += exp(*l);
    }
    out
}

/// `Σ_i W_i p_i + W_NON p_NON` for one candidate.
pub fn score_new(copy_by_context: &[f64], p_non: f64, weights: &[f64], w_non: f64) -> f64 {
    copy_by_context
        .iter()
        .zip(weights)
        .map(|(p, w)| p * w)
        .sum::<f64>()
        + w_non * p_non
}

/// Everything one decoder step computes, kept for the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct StepTrace {
    pub s_prev: Vec<f64>,
    pub att_hidden: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub gru: GruCache,
    pub out: Vec<f64>,
    /// Generation probability per vocabulary id.
    pub p_gen: Vec<f64>,
    /// Copy probability per memory position.
    pub p_pos: Vec<f64>,
    pub p_non: Vec<f64>,
    pub raw: Vec<f64>,
    pub sum: f64,
}

impl Model {
    pub(crate) fn encode_traced(&self, prepared: &Prepared) -> (Memory, Vec<Vec<GruCache>>) {
        let h = self.config.hidden;
        let mut mem = Memory {
            states: Vec::new(),
            keys: Vec::new(),
            copy_keys: Vec::new(),
            context_of: Vec::new(),
            candidate: Vec::new(),
            candidates: prepared.candidate_count(&self.vocab),
        };
        let mut caches = Vec::with_capacity(prepared.positions.len());
        for (i, positions) in prepared.positions.iter().enumerate() {
            let enc = &self.params.encoders[i];
            let mut state = vec![0.0; h];
            let mut ctx_caches = Vec::with_capacity(positions.len());
            for p in positions {
                let c = enc.forward(self.embedding.row(p.token), &state);
                state.clone_from(&c.h);
                mem.keys.push(self.params.attention.key(&c.h));
                mem.copy_keys
                    .push(self.params.copy_w.mul(&c.h).into_iter().map(tanh).collect());
                mem.states.push(c.h.clone());
                mem.context_of.push(i);
                mem.candidate.push(p.candidate);
                ctx_caches.push(c);
            }
            caches.push(ctx_caches);
        }
        (mem, caches)
    }

    pub fn encode(&self, prepared: &Prepared) -> Memory {
        self.encode_traced(prepared).0
    }

    pub(crate) fn step_traced(
        &self,
        mem: &Memory,
        s_prev: &[f64],
        prev: Option<TokenId>,
    ) -> StepTrace {
        let p = &self.params;
        let h = self.config.hidden;
        let v_len = self.vocab.len();
        let n = mem.candidates;

        let (att_hidden, alpha) = if mem.states.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            let (hid, scores) = p.attention.hidden_and_scores(s_prev, &mem.keys);
            let mask = vec![true; scores.len()];
            (
                hid,
                crate::linalg::masked_softmax(&scores, &mask).expect("non-empty memory"),
            )
        };
        let mut context = vec![0.0; h];
        for (a, st) in alpha.iter().zip(&mem.states) {
            axpy(*a, st, &mut context);
        }

        let mut x = context.clone();
        match prev {
            Some(t) => x.extend_from_slice(self.input_row(t)),
            None => x.extend(core::iter::repeat_n(0.0, self.embedding.dim())),
        }
        let gru = p.decoder.forward(&x, s_prev);
        let mut out = gru.h.clone();
        out.extend_from_slice(&context);

        let mut gen_logits = vec![f64::NEG_INFINITY; v_len];
        for (w, l) in gen_logits.iter_mut().enumerate().skip(1) {
            *l = dot(p.gen_w.row(w), &out) + p.gen_b[w];
        }
        let copy_logits: Vec<f64> = if self.config.copy {
            mem.copy_keys.iter().map(|k| dot(k, &gru.h)).collect()
        } else {
            Vec::new()
        };
        let m = gen_logits
            .iter()
            .chain(&copy_logits)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let e_gen: Vec<f64> = gen_logits.iter().map(|l| exp(l - m)).collect();
        let e_pos: Vec<f64> = copy_logits.iter().map(|l| exp(l - m)).collect();
        let z: f64 = e_gen.iter().sum::<f64>() + e_pos.iter().sum::<f64>();
        let p_gen: Vec<f64> = e_gen.iter().map(|e| e / z).collect();
        let p_pos: Vec<f64> = e_pos.iter().map(|e| e / z).collect();

        let p_non = if self.config.noncopy {
            noncopy_row(prev, &self.stats, v_len, n)
        } else {
            vec![0.0; n]
        };
        let w_non = p.w_non();
        let mut raw = vec![0.0; n];
        for (w, r) in raw.iter_mut().enumerate().skip(1) {
            *r = if w < v_len { p_gen[w] } else { 0.0 } + w_non * p_non[w];
        }
        for (j, b) in p_pos.iter().enumerate() {
            raw[mem.candidate[j].index()] += p.context_weights[mem.context_of[j]] * b;
        }
        // NaN scores propagate into the sum so the loss reports them
        let sum = raw
            .iter()
            .skip(1)
            .map(|r| if r.is_nan() { *r } else { r.max(0.0) })
            .sum();
        StepTrace {
            s_prev: s_prev.to_vec(),
            att_hidden,
            alpha,
            gru,
            out,
            p_gen,
            p_pos,
            p_non,
            raw,
            sum,
        }
    }

    /// One decoder step from `state`. The returned state carries the new
    /// hidden vector; call [`DecoderState::advance`] with the emitted token
    /// before the next step.
    pub fn decode_step(
        &self,
        mem: &Memory,
        state: &DecoderState,
    ) -> (StepDistribution, DecoderState) {
        let t = self.step_traced(mem, &state.hidden, state.prev);
        let n = mem.candidates;
        let mut copy = vec![0.0; n];
        for (j, b) in t.p_pos.iter().enumerate() {
            copy[mem.candidate[j].index()] += self.params.context_weights[mem.context_of[j]] * b;
        }
        let mut generation = vec![0.0; n];
        generation[..t.p_gen.len()].copy_from_slice(&t.p_gen);
        let w_non = self.params.w_non();
        let noncopy: Vec<f64> = t
            .p_non
            .iter()
            .enumerate()
            .map(|(w, p)| if w == 0 { 0.0 } else { w_non * p })
            .collect();
        let degenerate = t.sum <= 0.0;
        let probs = if degenerate {
            let u = 1.0 / (n - 1) as f64;
            (0..n).map(|w| if w == 0 { 0.0 } else { u }).collect()
        } else {
            t.raw
                .iter()
                .enumerate()
                .map(|(w, r)| if w == 0 { 0.0 } else { r.max(0.0) / t.sum })
                .collect()
        };
        let next = DecoderState {
            hidden: t.gru.h,
            prev: state.prev,
        };
        (
            StepDistribution {
                probs,
                generation,
                copy,
                noncopy,
                degenerate,
            },
            next,
        )
    }
}
