use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::step::StepTrace;
use super::{Example, Model, ModelError, ModelParams, ParamGroup};
use crate::embedding::TokenId;
use crate::linalg::{axpy, dot, ln, sigmoid};

/// Smoothing added to every candidate's clamped score inside the loss so a
/// gold token whose score clamped to 0 gives a large finite loss.
pub const LOSS_SMOOTHING: f64 = 1e-10;

/// Slope of the hinge `max(0, −raw)` added on the gold score. The clamped
/// loss has no gradient towards a gold token scored below 0; the hinge
/// gives it one and vanishes once the score is positive.
pub const CLAMP_PENALTY: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Global gradient-norm ceiling.
    pub clip_norm: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.1,
            momentum: 0.9,
            clip_norm: 5.0,
            batch_size: 1,
            seed: 1,
        }
    }
}

fn step_loss(t: &StepTrace, gold: TokenId) -> f64 {
    let n = (t.raw.len() - 1) as f64;
    let q = t.raw[gold.index()].max(0.0);
    -ln((q + LOSS_SMOOTHING) / (t.sum + n * LOSS_SMOOTHING))
        + CLAMP_PENALTY * (-t.raw[gold.index()]).max(0.0)
}

impl Model {
    /// Mean per-step negative log-probability of the target under teacher
    /// forcing.
    pub fn loss(&self, ex: &Example) -> f64 {
        let mem = self.encode(&ex.prepared);
        let mut s = vec![0.0; self.config.hidden];
        let mut prev = None;
        let mut total = 0.0;
        for &gold in &ex.target {
            let t = self.step_traced(&mem, &s, prev);
            total += step_loss(&t, gold);
            s = t.gru.h;
            prev = Some(gold);
        }
        total / ex.target.len() as f64
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, ex: &Example) -> (f64, ModelParams) {
        let p = &self.params;
        let h = self.config.hidden;
        let v_len = self.vocab.len();
        let (mem, enc_caches) = self.encode_traced(&ex.prepared);
        let n_pos = mem.states.len();

        let mut traces = Vec::with_capacity(ex.target.len());
        let mut s = vec![0.0; h];
        let mut prev = None;
        let mut total = 0.0;
        for &gold in &ex.target {
            let t = self.step_traced(&mem, &s, prev);
            total += step_loss(&t, gold);
            s.clone_from(&t.gru.h);
            traces.push(t);
            prev = Some(gold);
        }
        let steps = ex.target.len() as f64;

        let mut g = p.zeros_like();
        let mut d_states = vec![vec![0.0; h]; n_pos];
        let mut d_keys = vec![vec![0.0; self.config.attention]; n_pos];
        let mut d_copy_keys = vec![vec![0.0; h]; n_pos];
        let mut ds_next = vec![0.0; h];
        let dtheta_scale = -sigmoid(p.theta_non);

        for (t, &gold) in traces.iter().zip(&ex.target).rev() {
            let n = t.raw.len();
            let denom = t.sum + (n - 1) as f64 * LOSS_SMOOTHING;
            let q_gold = t.raw[gold.index()].max(0.0);
            // gradient of the step loss with respect to each raw score
            let mut draw = vec![0.0; n];
            for w in 1..n {
                if t.raw[w] > 0.0 {
                    draw[w] = 1.0 / denom / steps;
                }
            }
            if t.raw[gold.index()] > 0.0 {
                draw[gold.index()] -= 1.0 / (q_gold + LOSS_SMOOTHING) / steps;
            } else if t.raw[gold.index()] < 0.0 {
                draw[gold.index()] -= CLAMP_PENALTY / steps;
            }

            let omega_pos: Vec<f64> = (0..t.p_pos.len())
                .map(|j| p.context_weights[mem.context_of[j]] * draw[mem.candidate[j].index()])
                .collect();
            for (j, b) in t.p_pos.iter().enumerate() {
                g.context_weights[mem.context_of[j]] += draw[mem.candidate[j].index()] * b;
            }
            g.theta_non += dtheta_scale
                * draw
                    .iter()
                    .zip(&t.p_non)
                    .skip(1)
                    .map(|(d, q)| d * q)
                    .sum::<f64>();

            let mu = (1..v_len).map(|w| draw[w] * t.p_gen[w]).sum::<f64>()
                + omega_pos
                    .iter()
                    .zip(&t.p_pos)
                    .map(|(o, b)| o * b)
                    .sum::<f64>();

            let mut d_out = vec![0.0; 2 * h];
            for w in 1..v_len {
                let dg = t.p_gen[w] * (draw[w] - mu);
                if dg != 0.0 {
                    axpy(dg, &t.out, g.gen_w.row_mut(w));
                    g.gen_b[w] += dg;
                    axpy(dg, p.gen_w.row(w), &mut d_out);
                }
            }
            let mut ds: Vec<f64> = d_out[..h]
                .iter()
                .zip(&ds_next)
                .map(|(a, b)| a + b)
                .collect();
            let mut d_ctx = d_out[h..].to_vec();
            for j in 0..t.p_pos.len() {
                let dc = t.p_pos[j] * (omega_pos[j] - mu);
                axpy(dc, &mem.copy_keys[j], &mut ds);
                axpy(dc, &t.gru.h, &mut d_copy_keys[j]);
            }

            let mut dx = vec![0.0; t.gru.x.len()];
            let ds_prev = p
                .decoder
                .backward(&t.gru, &ds, &mut g.decoder, Some(&mut dx));
            axpy(1.0, &dx[..h], &mut d_ctx);
            ds_next = ds_prev;

            if n_pos > 0 {
                let d_alpha: Vec<f64> = mem.states.iter().map(|st| dot(&d_ctx, st)).collect();
                let mean = dot(&t.alpha, &d_alpha);
                let mut dq = vec![0.0; self.config.attention];
                for j in 0..n_pos {
                    axpy(t.alpha[j], &d_ctx, &mut d_states[j]);
                    let de = t.alpha[j] * (d_alpha[j] - mean);
                    if de == 0.0 {
                        continue;
                    }
                    let u = &t.att_hidden[j];
                    axpy(de, u, &mut g.attention.v);
                    for a in 0..u.len() {
                        let dpre = de * p.attention.v[a] * (1.0 - u[a] * u[a]);
                        d_keys[j][a] += dpre;
                        dq[a] += dpre;
                    }
                }
                g.attention.w_query.add_outer(&dq, &t.s_prev, 1.0);
                axpy(1.0, &dq, &mut g.attention.bias);
                p.attention.w_query.mul_t_add(&dq, &mut ds_next);
            }
        }

        for j in 0..n_pos {
            let st = &mem.states[j];
            g.attention.w_key.add_outer(&d_keys[j], st, 1.0);
            p.attention.w_key.mul_t_add(&d_keys[j], &mut d_states[j]);
            let ck = &mem.copy_keys[j];
            let dpre: Vec<f64> = d_copy_keys[j]
                .iter()
                .zip(ck)
                .map(|(d, k)| d * (1.0 - k * k))
                .collect();
            g.copy_w.add_outer(&dpre, st, 1.0);
            p.copy_w.mul_t_add(&dpre, &mut d_states[j]);
        }

        let mut offset = 0;
        for (i, caches) in enc_caches.iter().enumerate() {
            let mut dh_next = vec![0.0; h];
            for (k, c) in caches.iter().enumerate().rev() {
                let dh: Vec<f64> = d_states[offset + k]
                    .iter()
                    .zip(&dh_next)
                    .map(|(a, b)| a + b)
                    .collect();
                dh_next = p.encoders[i].backward(c, &dh, &mut g.encoders[i], None);
            }
            offset += caches.len();
        }

        (total / steps, g)
    }
}

fn global_norm(g: &ModelParams) -> f64 {
    libm::sqrt(g.tensors().iter().map(|(_, t)| dot(t, t)).sum())
}

/// SGD with momentum and gradient-norm clipping over shuffled mini-batches.
/// Context weights are projected back to `≥ 0` after every update.
/// Returns the mean loss of each epoch. Embeddings are not updated.
pub fn train(
    model: &mut Model,
    data: &[Example],
    cfg: &TrainConfig,
) -> Result<Vec<f64>, ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut velocity = model.params.zeros_like();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = cfg.batch_size.max(1);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut grad: Option<ModelParams> = None;
            for &e in chunk {
                let (loss, g) = model.loss_and_gradient(&data[e]);
                if !loss.is_finite() || !g.is_finite() {
                    return Err(ModelError::NonFiniteLoss { epoch, example: e });
                }
                epoch_loss += loss;
                match grad.as_mut() {
                    None => grad = Some(g),
                    Some(acc) => {
                        for ((_, a), (_, b)) in acc.tensors_mut().into_iter().zip(g.tensors()) {
                            axpy(1.0, b, a);
                        }
                    }
                }
            }
            let mut grad = grad.expect("non-empty chunk");
            let scale = 1.0 / chunk.len() as f64;
            for (_, t) in grad.tensors_mut() {
                t.iter_mut().for_each(|v| *v *= scale);
            }
            if !model.config.learn_weights {
                grad.context_weights.iter_mut().for_each(|v| *v = 0.0);
            }
            let norm = global_norm(&grad);
            let clip = if norm > cfg.clip_norm {
                cfg.clip_norm / norm
            } else {
                1.0
            };
            for (((_, p), (_, v)), (_, g)) in model
                .params
                .tensors_mut()
                .into_iter()
                .zip(velocity.tensors_mut())
                .zip(grad.tensors())
            {
                for k in 0..p.len() {
                    v[k] = cfg.momentum * v[k] - cfg.learning_rate * clip * g[k];
                    p[k] += v[k];
                }
            }
            for (w, v) in model
                .params
                .context_weights
                .iter_mut()
                .zip(velocity.context_weights.iter_mut())
            {
                if *w < 0.0 {
                    *w = 0.0;
                    *v = 0.0;
                }
            }
        }
        curve.push(epoch_loss / data.len() as f64);
    }
    Ok(curve)
}

/// Relative error between analytic and central-difference gradients, per
/// parameter group: `‖a − n‖ / max(‖a‖, ‖n‖, 1e-12)` over every scalar in
/// the group.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub groups: Vec<(ParamGroup, f64)>,
}

impl GradCheck {
    pub fn max_error(&self) -> f64 {
        self.groups.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }

    pub fn error(&self, group: ParamGroup) -> Option<f64> {
        self.groups
            .iter()
            .find(|(g, _)| *g == group)
            .map(|(_, e)| *e)
    }
}

/// Compares [`Model::loss_and_gradient`] with central differences
/// `(L(x + ε) − L(x − ε)) / 2ε` of [`Model::loss`] for every scalar
/// parameter.
pub fn grad_check(model: &Model, ex: &Example, epsilon: f64) -> GradCheck {
    let (_, analytic) = model.loss_and_gradient(ex);
    let analytic: Vec<(ParamGroup, Vec<f64>)> = analytic
        .tensors()
        .into_iter()
        .map(|(grp, t)| (grp, t.to_vec()))
        .collect();
    let mut probe = model.clone();
    // per group: Σ(a − n)², Σa², Σn²
    let mut sums: Vec<(ParamGroup, [f64; 3])> = Vec::new();
    for (ti, (group, a)) in analytic.iter().enumerate() {
        for k in 0..a.len() {
            let orig = probe.params.tensors_mut()[ti].1[k];
            let mut at = |offset: f64| {
                probe.params.tensors_mut()[ti].1[k] = orig + offset;
                probe.loss(ex)
            };
            let numeric = (at(epsilon) - at(-epsilon)) / (2.0 * epsilon);
            probe.params.tensors_mut()[ti].1[k] = orig;
            let d = a[k] - numeric;
            let acc = match sums.iter_mut().find(|(g, _)| g == group) {
                Some((_, acc)) => acc,
                None => {
                    sums.push((*group, [0.0; 3]));
                    &mut sums.last_mut().expect("just pushed").1
                }
            };
            acc[0] += d * d;
            acc[1] += a[k] * a[k];
            acc[2] += numeric * numeric;
        }
    }
    let groups = sums
        .into_iter()
        .map(|(g, [d, a, n])| {
            (
                g,
                libm::sqrt(d) / libm::sqrt(a).max(libm::sqrt(n)).max(1e-12),
            )
        })
        .collect();
    GradCheck { groups }
}
