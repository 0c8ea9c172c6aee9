//! Adam (default) and plain SGD over the model's trainable tensors.
//!
//! Frozen blocks are skipped entirely: no moment updates, no parameter
//! change. A non-finite gradient anywhere aborts the step before any tensor
//! is touched.

use std::fmt;
use std::str::FromStr;

use super::{MlpModel, NnError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for one tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamMoments {
    pub fn new(len: usize) -> Self {
        AdamMoments {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// One bias-corrected update at step `t` (1-based).
    pub fn apply(&mut self, value: &mut [f64], grad: &[f64], cfg: &AdamConfig, t: u64) {
        let c1 = 1.0 - cfg.beta1.powf(t as f64);
        let c2 = 1.0 - cfg.beta2.powf(t as f64);
        for (((p, g), m), v) in value
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    moments: Vec<AdamMoments>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, model: &mut MlpModel) -> Result<(), NnError> {
        check_finite(model)?;
        let mut params = model.params_mut();
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| AdamMoments::new(p.value.len()))
                .collect();
        }
        self.step += 1;
        for (p, moments) in params.iter_mut().zip(&mut self.moments) {
            if !p.frozen {
                moments.apply(p.value, p.grad, &self.config, self.step);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn step(&mut self, model: &mut MlpModel) -> Result<(), NnError> {
        check_finite(model)?;
        for p in model.params_mut() {
            if !p.frozen {
                for (v, g) in p.value.iter_mut().zip(p.grad) {
                    *v -= self.lr * g;
                }
            }
        }
        Ok(())
    }
}

fn check_finite(model: &mut MlpModel) -> Result<(), NnError> {
    for p in model.params_mut() {
        if !p.frozen && p.grad.iter().any(|g| !g.is_finite()) {
            return Err(NnError::NonFiniteGradient {
                param: p.id.to_string(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(format!(
                "unknown optimizer {other:?} (expected adam or sgd)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Adam(Adam),
    Sgd(Sgd),
}

impl Optimizer {
    /// Fresh state; Adam uses its default betas and eps.
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(AdamConfig {
                lr,
                ..AdamConfig::default()
            })),
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd { lr }),
        }
    }

    pub fn step(&mut self, model: &mut MlpModel) -> Result<(), NnError> {
        match self {
            Optimizer::Adam(a) => a.step(model),
            Optimizer::Sgd(s) => s.step(model),
        }
    }
}
