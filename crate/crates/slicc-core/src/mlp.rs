//! One-hidden-layer tanh network with exact backprop for the Q-target loss.
//!
//! forward: out = w2 tanh(w1 x + b1) + b2. The loss differentiated here is
//! the mean over a batch of (target - out[action])^2, touching exactly one
//! output component per sample. Everything is plain loops in a fixed order;
//! given the same inputs the same bits come out.
//!
//! Leader networks emit 81 values read as a row-major 9x9 matrix; helpers
//! at the bottom convert between flat and (row, column) indexing.

use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SliccError;
use crate::fmath;

/// Weights and biases; also serves as the gradient container since the
/// shapes coincide. w1 is hidden x in, w2 is out x hidden, both row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpParams {
    in_dim: usize,
    hidden_dim: usize,
    out_dim: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// One training sample: observation, selected output component, target.
#[derive(Debug, Clone, Copy)]
pub struct TrainSample<'a> {
    pub obs: &'a [f64],
    pub action: usize,
    pub target: f64,
}

impl MlpParams {
    /// Fan-in uniform init: w1 ~ U(+-1/sqrt(in)), w2 ~ U(+-1/sqrt(hidden)),
    /// biases zero. Draw order is w1 row-major then w2 row-major, so a seed
    /// pins every entry.
    pub fn init(seed: u64, in_dim: usize, hidden_dim: usize, out_dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = 1.0 / fmath::sqrt(in_dim as f64);
        let s2 = 1.0 / fmath::sqrt(hidden_dim as f64);
        let u1 = Uniform::new_inclusive(-s1, s1);
        let u2 = Uniform::new_inclusive(-s2, s2);
        let w1 = (0..hidden_dim * in_dim).map(|_| u1.sample(&mut rng)).collect();
        let w2 = (0..out_dim * hidden_dim).map(|_| u2.sample(&mut rng)).collect();
        Self {
            in_dim,
            hidden_dim,
            out_dim,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; out_dim],
        }
    }

    /// All-zero parameters of the given shape (gradient container).
    pub fn zeros(in_dim: usize, hidden_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            hidden_dim,
            out_dim,
            w1: vec![0.0; hidden_dim * in_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; out_dim * hidden_dim],
            b2: vec![0.0; out_dim],
        }
    }

    /// Rebuild from raw storage, validating shapes and finiteness; the
    /// checkpoint loader runs through here.
    pub fn from_parts(
        in_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self, SliccError> {
        let p = Self {
            in_dim,
            hidden_dim,
            out_dim,
            w1,
            b1,
            w2,
            b2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SliccError> {
        if self.in_dim == 0 || self.hidden_dim == 0 || self.out_dim == 0 {
            return Err(SliccError::BadConfig("zero network dimension"));
        }
        if self.w1.len() != self.hidden_dim * self.in_dim
            || self.b1.len() != self.hidden_dim
            || self.w2.len() != self.out_dim * self.hidden_dim
            || self.b2.len() != self.out_dim
        {
            return Err(SliccError::DimMismatch {
                expected: self.hidden_dim * self.in_dim,
                got: self.w1.len(),
            });
        }
        let all = self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2);
        if !all.into_iter().all(|x| x.is_finite()) {
            return Err(SliccError::NonFinite("network parameter"));
        }
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Mutable views of (w1, b1, w2, b2); optimizer and tests poke through
    /// here.
    pub fn params_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2)
    }

    pub fn params(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        (&self.w1, &self.b1, &self.w2, &self.b2)
    }

    /// Hidden activations tanh(w1 obs + b1) into a caller buffer.
    pub fn hidden_into(&self, obs: &[f64], hidden: &mut [f64]) {
        debug_assert_eq!(obs.len(), self.in_dim);
        debug_assert_eq!(hidden.len(), self.hidden_dim);
        for (j, slot) in hidden.iter_mut().enumerate() {
            let row = &self.w1[j * self.in_dim..(j + 1) * self.in_dim];
            let mut z = self.b1[j];
            for (w, x) in row.iter().zip(obs) {
                z += w * x;
            }
            *slot = fmath::tanh(z);
        }
    }

    /// One output component from precomputed hidden activations.
    pub fn output_component(&self, hidden: &[f64], k: usize) -> f64 {
        debug_assert_eq!(hidden.len(), self.hidden_dim);
        debug_assert!(k < self.out_dim);
        let row = &self.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
        let mut z = self.b2[k];
        for (w, h) in row.iter().zip(hidden) {
            z += w * h;
        }
        z
    }

    /// All output components from precomputed hidden activations.
    pub fn output_into(&self, hidden: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.out_dim);
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.output_component(hidden, k);
        }
    }

    /// Full forward pass. Allocates; the buffer variants above serve the
    /// hot loops.
    pub fn forward(&self, obs: &[f64]) -> Result<Vec<f64>, SliccError> {
        if obs.len() != self.in_dim {
            return Err(SliccError::DimMismatch {
                expected: self.in_dim,
                got: obs.len(),
            });
        }
        let mut hidden = vec![0.0; self.hidden_dim];
        self.hidden_into(obs, &mut hidden);
        let mut out = vec![0.0; self.out_dim];
        self.output_into(&hidden, &mut out);
        Ok(out)
    }

    /// Mean squared error on each sample's selected component, with exact
    /// gradients accumulated into `grads` (zeroed here first). Returns the
    /// loss. `hidden_scratch` is resized as needed and reused across calls.
    pub fn loss_and_grad_into(
        &self,
        batch: &[TrainSample<'_>],
        grads: &mut MlpParams,
        hidden_scratch: &mut Vec<f64>,
    ) -> Result<f64, SliccError> {
        if batch.is_empty() {
            return Err(SliccError::BadState("empty batch"));
        }
        if grads.in_dim != self.in_dim
            || grads.hidden_dim != self.hidden_dim
            || grads.out_dim != self.out_dim
        {
            return Err(SliccError::DimMismatch {
                expected: self.hidden_dim,
                got: grads.hidden_dim,
            });
        }
        for sample in batch {
            if sample.obs.len() != self.in_dim {
                return Err(SliccError::DimMismatch {
                    expected: self.in_dim,
                    got: sample.obs.len(),
                });
            }
            if sample.action >= self.out_dim {
                return Err(SliccError::DimMismatch {
                    expected: self.out_dim,
                    got: sample.action,
                });
            }
            if !sample.target.is_finite() {
                return Err(SliccError::NonFinite("training target"));
            }
        }

        grads.w1.iter_mut().for_each(|g| *g = 0.0);
        grads.b1.iter_mut().for_each(|g| *g = 0.0);
        grads.w2.iter_mut().for_each(|g| *g = 0.0);
        grads.b2.iter_mut().for_each(|g| *g = 0.0);
        hidden_scratch.resize(self.hidden_dim, 0.0);

        let inv_n = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for sample in batch {
            self.hidden_into(sample.obs, hidden_scratch);
            let q = self.output_component(hidden_scratch, sample.action);
            let err = q - sample.target;
            loss += err * err * inv_n;
            // d loss / d q for this sample under the batch mean.
            let gq = 2.0 * err * inv_n;

            let k = sample.action;
            grads.b2[k] += gq;
            let w2_row = &self.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
            let gw2_row = &mut grads.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
            for j in 0..self.hidden_dim {
                let h = hidden_scratch[j];
                gw2_row[j] += gq * h;
                // Through tanh: dz = gq * w2[k,j] * (1 - h^2).
                let gz = gq * w2_row[j] * (1.0 - h * h);
                grads.b1[j] += gz;
                let gw1_row = &mut grads.w1[j * self.in_dim..(j + 1) * self.in_dim];
                for (gw, x) in gw1_row.iter_mut().zip(sample.obs) {
                    *gw += gz * x;
                }
            }
        }
        Ok(loss)
    }

    /// Allocating wrapper around `loss_and_grad_into`.
    pub fn loss_and_grad(
        &self,
        batch: &[TrainSample<'_>],
    ) -> Result<(f64, MlpParams), SliccError> {
        let mut grads = MlpParams::zeros(self.in_dim, self.hidden_dim, self.out_dim);
        let mut scratch = Vec::new();
        let loss = self.loss_and_grad_into(batch, &mut grads, &mut scratch)?;
        Ok((loss, grads))
    }
}

/// Gradient-descent state. Adam keeps bias-corrected first and second
/// moments shaped like the parameters.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        m: MlpParams,
        v: MlpParams,
        t: u64,
    },
}

impl Optimizer {
    pub fn sgd(lr: f64) -> Result<Self, SliccError> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(SliccError::BadConfig("learning rate must be positive"));
        }
        Ok(Optimizer::Sgd { lr })
    }

    /// Adam with the usual defaults: beta1 0.9, beta2 0.999, eps 1e-8.
    pub fn adam(lr: f64, shape_like: &MlpParams) -> Result<Self, SliccError> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(SliccError::BadConfig("learning rate must be positive"));
        }
        Ok(Optimizer::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: MlpParams::zeros(shape_like.in_dim, shape_like.hidden_dim, shape_like.out_dim),
            v: MlpParams::zeros(shape_like.in_dim, shape_like.hidden_dim, shape_like.out_dim),
            t: 0,
        })
    }

    /// Apply one update in place.
    pub fn apply_update(&mut self, params: &mut MlpParams, grads: &MlpParams) {
        match self {
            Optimizer::Sgd { lr } => {
                let lr = *lr;
                for (slot, g) in flat_mut(params).zip(flat(grads)) {
                    *slot -= lr * g;
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                m,
                v,
                t,
            } => {
                *t += 1;
                let (lr, b1, b2, eps) = (*lr, *beta1, *beta2, *eps);
                let corr1 = 1.0 - powi_u(b1, *t);
                let corr2 = 1.0 - powi_u(b2, *t);
                for (((slot, g), mj), vj) in flat_mut(params)
                    .zip(flat(grads))
                    .zip(flat_mut(m))
                    .zip(flat_mut(v))
                {
                    *mj = b1 * *mj + (1.0 - b1) * g;
                    *vj = b2 * *vj + (1.0 - b2) * g * g;
                    let m_hat = *mj / corr1;
                    let v_hat = *vj / corr2;
                    *slot -= lr * m_hat / (fmath::sqrt(v_hat) + eps);
                }
            }
        }
    }
}

fn powi_u(base: f64, exp: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

fn flat(p: &MlpParams) -> impl Iterator<Item = f64> + '_ {
    p.w1.iter()
        .chain(&p.b1)
        .chain(&p.w2)
        .chain(&p.b2)
        .copied()
}

fn flat_mut(p: &mut MlpParams) -> impl Iterator<Item = &mut f64> {
    p.w1.iter_mut()
        .chain(p.b1.iter_mut())
        .chain(p.w2.iter_mut())
        .chain(p.b2.iter_mut())
}

/// Flat index of a joint action in a row-major leader output.
pub const fn joint_index(a_p: usize, a_i: usize, n_i: usize) -> usize {
    a_p * n_i + a_i
}

/// Inverse of `joint_index`.
pub const fn joint_pair(k: usize, n_i: usize) -> (usize, usize) {
    (k / n_i, k % n_i)
}
