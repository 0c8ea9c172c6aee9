//! The three layer kinds in a block, each with its own backward pass.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Matrix;

/// Fully connected layer, `y = x·Wᵀ + b` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub grad_weight: Matrix,
    pub grad_bias: Vec<f64>,
}

impl LinearLayer {
    /// He-style init: weights ~ N(0, √(2/in)), zero bias.
    pub fn init<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, (2.0 / in_dim as f64).sqrt()).expect("positive std");
        let weight = Matrix::from_fn(out_dim, in_dim, |_, _| normal.sample(rng));
        LinearLayer {
            weight,
            bias: vec![0.0; out_dim],
            grad_weight: Matrix::zeros(out_dim, in_dim),
            grad_bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut y = x.matmul_transposed(&self.weight);
        let out = self.out_dim();
        for row in y.as_mut_slice().chunks_exact_mut(out) {
            for (v, b) in row.iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        y
    }

    /// Stores parameter gradients and returns the gradient w.r.t. `x`.
    pub fn backward(&mut self, x: &Matrix, grad: &Matrix) -> Matrix {
        self.grad_weight = grad.transposed_matmul(x);
        self.grad_bias = grad.column_sums();
        grad.matmul(&self.weight)
    }

    pub fn zero_grad(&mut self) {
        self.grad_weight.as_mut_slice().fill(0.0);
        self.grad_bias.fill(0.0);
    }
}

pub const BATCH_NORM_EPS: f64 = 1e-5;
pub const BATCH_NORM_MOMENTUM: f64 = 0.1;

/// Per-feature batch normalisation with learnable affine parameters.
///
/// In training the batch mean and biased variance normalise the input and the
/// running statistics move toward the batch mean and unbiased variance:
/// `running = (1 - momentum)·running + momentum·batch`. Evaluation reads only
/// the running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub grad_gamma: Vec<f64>,
    pub grad_beta: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

/// What the training forward pass keeps for backward.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(width: usize) -> Self {
        BatchNormLayer {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            grad_gamma: vec![0.0; width],
            grad_beta: vec![0.0; width],
            momentum: BATCH_NORM_MOMENTUM,
            eps: BATCH_NORM_EPS,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward_eval(&self, x: &Matrix) -> Matrix {
        let scale: Vec<f64> = self
            .gamma
            .iter()
            .zip(&self.running_var)
            .map(|(g, v)| g / (v + self.eps).sqrt())
            .collect();
        let mut y = x.clone();
        for row in y.as_mut_slice().chunks_exact_mut(self.width()) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.running_mean[j]) * scale[j] + self.beta[j];
            }
        }
        y
    }

    /// Needs at least two rows; the caller enforces it.
    pub fn forward_train(&mut self, x: &Matrix) -> (Matrix, BatchNormCache) {
        let (n, d) = x.shape();
        debug_assert!(n >= 2);
        let nf = n as f64;
        let mean: Vec<f64> = x.column_sums().into_iter().map(|s| s / nf).collect();
        let mut var = vec![0.0; d];
        for row in x.as_slice().chunks_exact(d) {
            for j in 0..d {
                let dv = row[j] - mean[j];
                var[j] += dv * dv;
            }
        }
        var.iter_mut().for_each(|v| *v /= nf);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();

        let mut normalized = x.clone();
        let mut y = x.clone();
        for (nrow, yrow) in normalized
            .as_mut_slice()
            .chunks_exact_mut(d)
            .zip(y.as_mut_slice().chunks_exact_mut(d))
        {
            for j in 0..d {
                let h = (nrow[j] - mean[j]) * inv_std[j];
                nrow[j] = h;
                yrow[j] = self.gamma[j] * h + self.beta[j];
            }
        }

        let m = self.momentum;
        let unbias = nf / (nf - 1.0);
        for j in 0..d {
            self.running_mean[j] = (1.0 - m) * self.running_mean[j] + m * mean[j];
            self.running_var[j] = (1.0 - m) * self.running_var[j] + m * var[j] * unbias;
        }
        (
            y,
            BatchNormCache {
                normalized,
                inv_std,
            },
        )
    }

    /// Full batch-statistics derivative:
    /// `dx = γ·σ⁻¹/n · (n·g − Σg − x̂·Σ(g·x̂))`.
    pub fn backward(&mut self, cache: &BatchNormCache, grad: &Matrix) -> Matrix {
        let (n, d) = grad.shape();
        let mut dgamma = vec![0.0; d];
        let mut dbeta = vec![0.0; d];
        for (grow, hrow) in grad
            .as_slice()
            .chunks_exact(d)
            .zip(cache.normalized.as_slice().chunks_exact(d))
        {
            for j in 0..d {
                dgamma[j] += grow[j] * hrow[j];
                dbeta[j] += grow[j];
            }
        }
        let nf = n as f64;
        let mut dx = grad.clone();
        for (drow, hrow) in dx
            .as_mut_slice()
            .chunks_exact_mut(d)
            .zip(cache.normalized.as_slice().chunks_exact(d))
        {
            for j in 0..d {
                let k = self.gamma[j] * cache.inv_std[j] / nf;
                drow[j] = k * (nf * drow[j] - dbeta[j] - hrow[j] * dgamma[j]);
            }
        }
        self.grad_gamma = dgamma;
        self.grad_beta = dbeta;
        dx
    }

    /// Input gradient of [`forward_eval`](Self::forward_eval); parameter
    /// gradients stay zero.
    pub fn backward_eval(&mut self, grad: &Matrix) -> Matrix {
        let d = self.width();
        let scale: Vec<f64> = self
            .gamma
            .iter()
            .zip(&self.running_var)
            .map(|(g, v)| g / (v + self.eps).sqrt())
            .collect();
        let mut dx = grad.clone();
        for row in dx.as_mut_slice().chunks_exact_mut(d) {
            for (v, s) in row.iter_mut().zip(&scale) {
                *v *= s;
            }
        }
        self.zero_grad();
        dx
    }

    pub fn zero_grad(&mut self) {
        self.grad_gamma.fill(0.0);
        self.grad_beta.fill(0.0);
    }
}

pub const DEFAULT_DROPOUT: f64 = 0.1;

/// Inverted dropout: survivors are scaled by `1/(1-p)` so evaluation is the
/// identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutLayer {
    pub p: f64,
}

impl DropoutLayer {
    pub fn new(p: f64) -> Self {
        DropoutLayer { p }
    }

    /// Returns the output and the per-element mask (0 or `1/(1-p)`).
    pub fn forward_train<R: Rng>(&self, x: &Matrix, rng: &mut R) -> (Matrix, Vec<f64>) {
        if self.p == 0.0 {
            return (x.clone(), vec![1.0; x.as_slice().len()]);
        }
        let keep = 1.0 / (1.0 - self.p);
        let mask: Vec<f64> = (0..x.as_slice().len())
            .map(|_| {
                if rng.random::<f64>() < self.p {
                    0.0
                } else {
                    keep
                }
            })
            .collect();
        let mut y = x.clone();
        for (v, m) in y.as_mut_slice().iter_mut().zip(&mask) {
            *v *= m;
        }
        (y, mask)
    }

    pub fn backward(mask: &[f64], grad: &Matrix) -> Matrix {
        let mut dx = grad.clone();
        for (v, m) in dx.as_mut_slice().iter_mut().zip(mask) {
            *v *= m;
        }
        dx
    }
}

/// Smallest distance the sigmoid head keeps from 0 and 1.
pub const SIGMOID_MARGIN: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => {
                let s = if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                };
                s.clamp(SIGMOID_MARGIN, 1.0 - SIGMOID_MARGIN)
            }
        }
    }

    /// Derivative expressed through the activation's output.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}
