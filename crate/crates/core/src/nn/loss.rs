use std::fmt;
use std::str::FromStr;

use super::{Matrix, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    /// Mean absolute error; less sensitive to outlying scores.
    #[default]
    L1,
    Mse,
}

impl Loss {
    pub fn compute(self, pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix), NnError> {
        match self {
            Loss::L1 => l1_loss(pred, target),
            Loss::Mse => mse_loss(pred, target),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::L1 => "l1",
            Loss::Mse => "mse",
        })
    }
}

impl FromStr for Loss {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "l1" => Ok(Loss::L1),
            "mse" | "l2" => Ok(Loss::Mse),
            other => Err(format!("unknown loss {other:?} (expected l1 or mse)")),
        }
    }
}

fn check(pred: &Matrix, target: &Matrix) -> Result<f64, NnError> {
    if pred.shape() != target.shape() {
        return Err(NnError::ShapeMismatch {
            expected: pred.shape(),
            found: target.shape(),
        });
    }
    Ok(pred.as_slice().len().max(1) as f64)
}

/// `mean |p − t|` and its gradient `sign(p − t)/N` with `sign(0) = 0`.
pub fn l1_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix), NnError> {
    let n = check(pred, target)?;
    let mut loss = 0.0;
    let mut grad = pred.clone();
    for (g, t) in grad.as_mut_slice().iter_mut().zip(target.as_slice()) {
        let d = *g - t;
        loss += d.abs();
        *g = if d > 0.0 {
            1.0 / n
        } else if d < 0.0 {
            -1.0 / n
        } else {
            0.0
        };
    }
    Ok((loss / n, grad))
}

/// `mean (p − t)²` and its gradient `2(p − t)/N`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix), NnError> {
    let n = check(pred, target)?;
    let mut loss = 0.0;
    let mut grad = pred.clone();
    for (g, t) in grad.as_mut_slice().iter_mut().zip(target.as_slice()) {
        let d = *g - t;
        loss += d * d;
        *g = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}
