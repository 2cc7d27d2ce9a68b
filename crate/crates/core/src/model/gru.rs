use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::ModelError;
use crate::linalg::{sigmoid, tanh, Matrix};

/// Gated recurrent unit with update gate `z`, reset gate `r` and candidate
/// `n`:
///
/// ```text
/// z = σ(W_z x + U_z h + b_z)
/// r = σ(W_r x + U_r h + b_r)
/// n = tanh(W_n x + U_n (r ⊙ h) + b_n)
/// h' = (1 − z) ⊙ n + z ⊙ h
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    pub w_z: Matrix,
    pub u_z: Matrix,
    pub b_z: Vec<f64>,
    pub w_r: Matrix,
    pub u_r: Matrix,
    pub b_r: Vec<f64>,
    pub w_n: Matrix,
    pub u_n: Matrix,
    pub b_n: Vec<f64>,
}

/// Values of one forward step kept for the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct GruCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub n: Vec<f64>,
    pub rh: Vec<f64>,
    pub h: Vec<f64>,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        GruParams {
            w_z: Matrix::zeros(hidden, input),
            u_z: Matrix::zeros(hidden, hidden),
            b_z: vec![0.0; hidden],
            w_r: Matrix::zeros(hidden, input),
            u_r: Matrix::zeros(hidden, hidden),
            b_r: vec![0.0; hidden],
            w_n: Matrix::zeros(hidden, input),
            u_n: Matrix::zeros(hidden, hidden),
            b_n: vec![0.0; hidden],
        }
    }

    pub fn random<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let s = 1.0 / libm::sqrt(hidden as f64);
        GruParams {
            w_z: Matrix::uniform(hidden, input, s, rng),
            u_z: Matrix::uniform(hidden, hidden, s, rng),
            b_z: vec![0.0; hidden],
            w_r: Matrix::uniform(hidden, input, s, rng),
            u_r: Matrix::uniform(hidden, hidden, s, rng),
            b_r: vec![0.0; hidden],
            w_n: Matrix::uniform(hidden, input, s, rng),
            u_n: Matrix::uniform(hidden, hidden, s, rng),
            b_n: vec![0.0; hidden],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols
    }

    pub fn hidden_dim(&self) -> usize {
        self.u_z.rows
    }

    pub fn tensors(&self) -> [&[f64]; 9] {
        [
            &self.w_z.data,
            &self.u_z.data,
            &self.b_z,
            &self.w_r.data,
            &self.u_r.data,
            &self.b_r,
            &self.w_n.data,
            &self.u_n.data,
            &self.b_n,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 9] {
        [
            &mut self.w_z.data,
            &mut self.u_z.data,
            &mut self.b_z,
            &mut self.w_r.data,
            &mut self.u_r.data,
            &mut self.b_r,
            &mut self.w_n.data,
            &mut self.u_n.data,
            &mut self.b_n,
        ]
    }

    pub(crate) fn forward(&self, x: &[f64], h_prev: &[f64]) -> GruCache {
        let mut z = self.b_z.clone();
        self.w_z.mul_add(x, &mut z);
        self.u_z.mul_add(h_prev, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut r = self.b_r.clone();
        self.w_r.mul_add(x, &mut r);
        self.u_r.mul_add(h_prev, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut n = self.b_n.clone();
        self.w_n.mul_add(x, &mut n);
        self.u_n.mul_add(&rh, &mut n);
        n.iter_mut().for_each(|v| *v = tanh(*v));
        let h = (0..n.len())
            .map(|k| (1.0 - z[k]) * n[k] + z[k] * h_prev[k])
            .collect();
        GruCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            z,
            r,
            n,
            rh,
            h,
        }
    }

    /// Accumulates parameter gradients into `grad`, adds the input gradient
    /// into `dx` and returns the gradient with respect to `h_prev`.
    pub(crate) fn backward(
        &self,
        c: &GruCache,
        dh: &[f64],
        grad: &mut GruParams,
        dx: Option<&mut [f64]>,
    ) -> Vec<f64> {
        let hn = dh.len();
        let mut dh_prev: Vec<f64> = (0..hn).map(|k| dh[k] * c.z[k]).collect();
        let da_n: Vec<f64> = (0..hn)
            .map(|k| dh[k] * (1.0 - c.z[k]) * (1.0 - c.n[k] * c.n[k]))
            .collect();
        let da_z: Vec<f64> = (0..hn)
            .map(|k| dh[k] * (c.h_prev[k] - c.n[k]) * c.z[k] * (1.0 - c.z[k]))
            .collect();
        let mut drh = vec![0.0; hn];
        self.u_n.mul_t_add(&da_n, &mut drh);
        let da_r: Vec<f64> = (0..hn)
            .map(|k| drh[k] * c.h_prev[k] * c.r[k] * (1.0 - c.r[k]))
            .collect();
        for k in 0..hn {
            dh_prev[k] += drh[k] * c.r[k];
        }
        self.u_z.mul_t_add(&da_z, &mut dh_prev);
        self.u_r.mul_t_add(&da_r, &mut dh_prev);

        grad.w_n.add_outer(&da_n, &c.x, 1.0);
        grad.u_n.add_outer(&da_n, &c.rh, 1.0);
        grad.w_z.add_outer(&da_z, &c.x, 1.0);
        grad.u_z.add_outer(&da_z, &c.h_prev, 1.0);
        grad.w_r.add_outer(&da_r, &c.x, 1.0);
        grad.u_r.add_outer(&da_r, &c.h_prev, 1.0);
        for k in 0..hn {
            grad.b_n[k] += da_n[k];
            grad.b_z[k] += da_z[k];
            grad.b_r[k] += da_r[k];
        }
        if let Some(dx) = dx {
            self.w_n.mul_t_add(&da_n, dx);
            self.w_z.mul_t_add(&da_z, dx);
            self.w_r.mul_t_add(&da_r, dx);
        }
        dh_prev
    }
}

/// One recurrence step.
pub fn gru_step(x: &[f64], h_prev: &[f64], p: &GruParams) -> Result<Vec<f64>, ModelError> {
    if x.len() != p.input_dim() || h_prev.len() != p.hidden_dim() {
        return Err(ModelError::DimensionMismatch {
            expected: (p.input_dim(), p.hidden_dim()),
            found: (x.len(), h_prev.len()),
        });
    }
    Ok(p.forward(x, h_prev).h)
}

/// Encoder states of a padded sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedContext {
    /// One state per position.
    pub states: Vec<Vec<f64>>,
    /// `true` for positions attention may look at.
    pub mask: Vec<bool>,
}

/// Runs the encoder over the first `true_length` vectors from a zero
/// state. PAD positions repeat the last real state and are masked.
pub fn encode_context(
    vectors: &[Vec<f64>],
    true_length: usize,
    p: &GruParams,
) -> Result<EncodedContext, ModelError> {
    let mut h = vec![0.0; p.hidden_dim()];
    let mut states = Vec::with_capacity(vectors.len());
    let mut mask = Vec::with_capacity(vectors.len());
    for (t, v) in vectors.iter().enumerate() {
        if t < true_length {
            h = gru_step(v, &h, p)?;
        }
        states.push(h.clone());
        mask.push(t < true_length);
    }
    Ok(EncodedContext { states, mask })
}
