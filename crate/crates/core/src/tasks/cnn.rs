use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::linalg::{exp, ln, Matrix};

pub const KERNEL_WIDTH: usize = 3;
pub const CONV1_FILTERS: usize = 16;
pub const CONV2_FILTERS: usize = 32;

/// Two-channel classifier over `time × channel_dim` inputs. Both channels
/// are stacked along the feature axis, convolved twice over time (width 3,
/// zero padding, ReLU), max-pooled over time and mapped to two logits.
/// Class 1 is "consistent".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnParams {
    pub time: usize,
    /// Width of one channel; the convolution sees twice this.
    pub channel_dim: usize,
    /// `CONV1_FILTERS × (3 · 2 · channel_dim)`, window-major.
    pub conv1: Matrix,
    pub bias1: Vec<f64>,
    pub conv2: Matrix,
    pub bias2: Vec<f64>,
    pub dense: Matrix,
    pub dense_bias: Vec<f64>,
}

/// Input pair `[M_cur, M_exist]`, each `time` rows of `channel_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct CnnInput {
    pub current: Vec<Vec<f64>>,
    pub existing: Vec<Vec<f64>>,
}

struct Trace {
    rows1: Vec<Vec<f64>>,
    pre1: Vec<Vec<f64>>,
    rows2: Vec<Vec<f64>>,
    pre2: Vec<Vec<f64>>,
    pooled: Vec<f64>,
    arg: Vec<usize>,
    probs: [f64; 2],
}

fn windows(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    let half = KERNEL_WIDTH / 2;
    (0..rows.len())
        .map(|t| {
            let mut w = Vec::with_capacity(KERNEL_WIDTH * width);
            for o in 0..KERNEL_WIDTH {
                match (t + o).checked_sub(half).and_then(|s| rows.get(s)) {
                    Some(r) => w.extend_from_slice(r),
                    None => w.extend(core::iter::repeat_n(0.0, width)),
                }
            }
            w
        })
        .collect()
}

fn conv(m: &Matrix, b: &[f64], windows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    windows
        .iter()
        .map(|w| {
            let mut out = b.to_vec();
            m.mul_add(w, &mut out);
            out
        })
        .collect()
}

fn relu(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().map(|v| v.max(0.0)).collect())
        .collect()
}

impl CnnParams {
    pub fn random(time: usize, channel_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let in1 = KERNEL_WIDTH * 2 * channel_dim;
        let in2 = KERNEL_WIDTH * CONV1_FILTERS;
        let he = |fan_in: usize| libm::sqrt(6.0 / fan_in as f64);
        CnnParams {
            time,
            channel_dim,
            conv1: Matrix::uniform(CONV1_FILTERS, in1, he(in1), &mut rng),
            bias1: vec![0.01; CONV1_FILTERS],
            conv2: Matrix::uniform(CONV2_FILTERS, in2, he(in2), &mut rng),
            bias2: vec![0.01; CONV2_FILTERS],
            dense: Matrix::uniform(2, CONV2_FILTERS, he(CONV2_FILTERS), &mut rng),
            dense_bias: vec![0.0; 2],
        }
    }

    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            &self.conv1.data,
            &self.bias1,
            &self.conv2.data,
            &self.bias2,
            &self.dense.data,
            &self.dense_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            &mut self.conv1.data,
            &mut self.bias1,
            &mut self.conv2.data,
            &mut self.bias2,
            &mut self.dense.data,
            &mut self.dense_bias,
        ]
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    /// Pads or truncates each channel to `time` rows and stacks them.
    fn stack(&self, input: &CnnInput) -> Result<Vec<Vec<f64>>, TaskError> {
        let d = self.channel_dim;
        let row = |rows: &[Vec<f64>], t: usize| -> Result<Vec<f64>, TaskError> {
            match rows.get(t) {
                Some(r) if r.len() != d => Err(TaskError::DimensionMismatch {
                    expected: d,
                    found: r.len(),
                }),
                Some(r) => Ok(r.clone()),
                None => Ok(vec![0.0; d]),
            }
        };
        (0..self.time)
            .map(|t| {
                let mut r = row(&input.current, t)?;
                r.extend(row(&input.existing, t)?);
                Ok(r)
            })
            .collect()
    }

    fn forward(&self, x: &[Vec<f64>]) -> Trace {
        let rows1 = windows(x, 2 * self.channel_dim);
        let pre1 = conv(&self.conv1, &self.bias1, &rows1);
        let rows2 = windows(&relu(&pre1), CONV1_FILTERS);
        let pre2 = conv(&self.conv2, &self.bias2, &rows2);
        let mut pooled = vec![f64::NEG_INFINITY; CONV2_FILTERS];
        let mut arg = vec![0; CONV2_FILTERS];
        for (t, r) in pre2.iter().enumerate() {
            for f in 0..CONV2_FILTERS {
                let v = r[f].max(0.0);
                if v > pooled[f] {
                    pooled[f] = v;
                    arg[f] = t;
                }
            }
        }
        let mut logits = self.dense_bias.clone();
        self.dense.mul_add(&pooled, &mut logits);
        let m = logits[0].max(logits[1]);
        let e = [exp(logits[0] - m), exp(logits[1] - m)];
        let z = e[0] + e[1];
        Trace {
            rows1,
            pre1,
            rows2,
            pre2,
            pooled,
            arg,
            probs: [e[0] / z, e[1] / z],
        }
    }

    /// `[p(inconsistent), p(consistent)]`.
    pub fn predict(&self, input: &CnnInput) -> Result<[f64; 2], TaskError> {
        Ok(self.forward(&self.stack(input)?).probs)
    }

    /// Cross-entropy of `label` (1 = consistent).
    pub fn loss(&self, input: &CnnInput, label: usize) -> Result<f64, TaskError> {
        Ok(-ln(self.predict(input)?[label]))
    }

    pub fn loss_and_gradient(
        &self,
        input: &CnnInput,
        label: usize,
    ) -> Result<(f64, CnnParams), TaskError> {
        let x = self.stack(input)?;
        let tr = self.forward(&x);
        let mut g = self.zeros_like();
        let dlogits = [
            tr.probs[0] - f64::from(label == 0),
            tr.probs[1] - f64::from(label == 1),
        ];
        g.dense.add_outer(&dlogits, &tr.pooled, 1.0);
        g.dense_bias.copy_from_slice(&dlogits);
        let mut dpooled = vec![0.0; CONV2_FILTERS];
        self.dense.mul_t_add(&dlogits, &mut dpooled);

        let mut dpre2 = vec![vec![0.0; CONV2_FILTERS]; self.time];
        for f in 0..CONV2_FILTERS {
            let t = tr.arg[f];
            if tr.pre2[t][f] > 0.0 {
                dpre2[t][f] = dpooled[f];
            }
        }
        let mut dh1 = vec![vec![0.0; CONV1_FILTERS]; self.time];
        let half = KERNEL_WIDTH / 2;
        for t in 0..self.time {
            g.conv2.add_outer(&dpre2[t], &tr.rows2[t], 1.0);
            for f in 0..CONV2_FILTERS {
                g.bias2[f] += dpre2[t][f];
            }
            let mut dwin = vec![0.0; KERNEL_WIDTH * CONV1_FILTERS];
            self.conv2.mul_t_add(&dpre2[t], &mut dwin);
            for o in 0..KERNEL_WIDTH {
                if let Some(s) = (t + o).checked_sub(half).filter(|s| *s < self.time) {
                    for c in 0..CONV1_FILTERS {
                        dh1[s][c] += dwin[o * CONV1_FILTERS + c];
                    }
                }
            }
        }
        for t in 0..self.time {
            let dpre1: Vec<f64> = (0..CONV1_FILTERS)
                .map(|c| if tr.pre1[t][c] > 0.0 { dh1[t][c] } else { 0.0 })
                .collect();
            g.conv1.add_outer(&dpre1, &tr.rows1[t], 1.0);
            for c in 0..CONV1_FILTERS {
                g.bias1[c] += dpre1[c];
            }
        }
        Ok((-ln(tr.probs[label]), g))
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnnTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for CnnTrainConfig {
    fn default() -> Self {
        CnnTrainConfig {
            epochs: 60,
            learning_rate: 2e-3,
            batch_size: 8,
            seed: 1,
        }
    }
}

/// Adam over mini-batches of `(input, label)` pairs in a seeded shuffled
/// order. Returns the mean loss per epoch.
pub fn train_cnn(
    cnn: &mut CnnParams,
    data: &[(CnnInput, usize)],
    cfg: &CnnTrainConfig,
) -> Result<Vec<f64>, TaskError> {
    if data.is_empty() {
        return Err(TaskError::EmptyDataset);
    }
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut m = cnn.zeros_like();
    let mut v = cnn.zeros_like();
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            let mut grad = cnn.zeros_like();
            for &i in batch {
                let (l, g) = cnn.loss_and_gradient(&data[i].0, data[i].1)?;
                if !l.is_finite() {
                    return Err(TaskError::NonFiniteLoss { epoch });
                }
                total += l;
                for (acc, gt) in grad.tensors_mut().into_iter().zip(g.tensors()) {
                    acc.iter_mut().zip(gt).for_each(|(a, b)| *a += b);
                }
            }
            step += 1;
            let scale = 1.0 / batch.len() as f64;
            let c1 = 1.0 - libm::pow(b1, f64::from(step));
            let c2 = 1.0 - libm::pow(b2, f64::from(step));
            let params = cnn.tensors_mut();
            for (((p, g), m), v) in params
                .into_iter()
                .zip(grad.tensors())
                .zip(m.tensors_mut())
                .zip(v.tensors_mut())
            {
                for k in 0..p.len() {
                    let gk = g[k] * scale;
                    m[k] = b1 * m[k] + (1.0 - b1) * gk;
                    v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
                    p[k] -= cfg.learning_rate * (m[k] / c1) / (libm::sqrt(v[k] / c2) + eps);
                }
            }
        }
        if !cnn.is_finite() {
            return Err(TaskError::NonFiniteLoss { epoch });
        }
        curve.push(total / data.len() as f64);
    }
    Ok(curve)
}
