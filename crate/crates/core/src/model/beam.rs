use alloc::vec::Vec;
use core::cmp::Ordering;

use super::step::DecoderState;
use super::{Model, Prepared};
use crate::embedding::TokenId;
use crate::linalg::ln;

/// A decoded name. `tokens` excludes the terminating EON.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<TokenId>,
    pub log_prob: f64,
    /// `log_prob` divided by the number of decoding steps (EON included).
    pub score: f64,
    pub ended_with_eon: bool,
}

struct Partial {
    hyp: Hypothesis,
    state: DecoderState,
}

fn steps(h: &Hypothesis) -> usize {
    h.tokens.len() + usize::from(h.ended_with_eon)
}

fn finished(h: &Hypothesis, max_len: usize) -> bool {
    h.ended_with_eon || h.tokens.len() >= max_len
}

/// Length-normalised beam search. Each round every unfinished hypothesis
/// is expanded by every candidate with non-zero probability; the k best of
/// the finished and new hypotheses survive. A hypothesis is finished at EON
/// or after `max_len` sub-tokens. Results are sorted by descending score,
/// ties by token text.
pub fn beam_decode(
    model: &Model,
    prepared: &Prepared,
    k: usize,
    max_len: usize,
) -> Vec<Hypothesis> {
    assert!(k >= 1, "beam width must be at least 1");
    let mem = model.encode(prepared);
    let text = |t: &TokenId| prepared.candidate_text(&model.vocab, *t);
    let order = |a: &Hypothesis, b: &Hypothesis| -> Ordering {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.tokens.iter().map(text).cmp(b.tokens.iter().map(text)))
            .then_with(|| a.ended_with_eon.cmp(&b.ended_with_eon))
    };

    let start = Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
        score: 0.0,
        ended_with_eon: false,
    };
    let mut beam = alloc::vec![Partial {
        hyp: start,
        state: DecoderState::initial(model.config.hidden)
    }];
    while beam.iter().any(|p| !finished(&p.hyp, max_len)) {
        let mut pool: Vec<Partial> = Vec::new();
        for p in beam {
            if finished(&p.hyp, max_len) {
                pool.push(p);
                continue;
            }
            let (dist, next) = model.decode_step(&mem, &p.state);
            for (c, &prob) in dist.probs.iter().enumerate().skip(1) {
                if prob <= 0.0 {
                    continue;
                }
                let id = TokenId(c as u32);
                let mut hyp = p.hyp.clone();
                hyp.log_prob += ln(prob);
                if id == TokenId::EON {
                    hyp.ended_with_eon = true;
                } else {
                    hyp.tokens.push(id);
                }
                hyp.score = hyp.log_prob / steps(&hyp) as f64;
                pool.push(Partial {
                    hyp,
                    state: next.clone().advance(id),
                });
            }
        }
        pool.sort_by(|a, b| order(&a.hyp, &b.hyp));
        pool.truncate(k);
        beam = pool;
    }
    beam.into_iter().map(|p| p.hyp).collect()
}
