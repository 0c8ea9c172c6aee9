//! Spearman, Pearson and MSE as used for memorability evaluation.
//!
//! Spearman is the Pearson correlation of average ranks, which stays correct
//! in the presence of ties (the `1 - 6Σd²/(n(n²-1))` shortcut does not).
//! A side with zero variance is an error, never a silent 0 or NaN.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Predicted,
    Actual,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Predicted => "predicted",
            Side::Actual => "actual",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {predicted} predicted vs {actual} actual")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("need at least {min} pairs, have {len}")]
    TooShort { len: usize, min: usize },
    #[error("{side} value at index {index} is not finite")]
    NonFinite { side: Side, index: usize },
    #[error("degenerate input: {side} values have zero variance")]
    ZeroVariance { side: Side },
}

/// Equal-length, finite predicted/actual sequences.
#[derive(Debug, Clone, Copy)]
pub struct ScorePairs<'a> {
    predicted: &'a [f64],
    actual: &'a [f64],
}

impl<'a> ScorePairs<'a> {
    pub fn new(predicted: &'a [f64], actual: &'a [f64]) -> Result<Self, MetricsError> {
        if predicted.len() != actual.len() {
            return Err(MetricsError::LengthMismatch {
                predicted: predicted.len(),
                actual: actual.len(),
            });
        }
        for (side, xs) in [(Side::Predicted, predicted), (Side::Actual, actual)] {
            if let Some(index) = xs.iter().position(|v| !v.is_finite()) {
                return Err(MetricsError::NonFinite { side, index });
            }
        }
        Ok(ScorePairs { predicted, actual })
    }

    pub fn predicted(&self) -> &'a [f64] {
        self.predicted
    }

    pub fn actual(&self) -> &'a [f64] {
        self.actual
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    fn require(&self, min: usize) -> Result<(), MetricsError> {
        if self.len() < min {
            Err(MetricsError::TooShort {
                len: self.len(),
                min,
            })
        } else {
            Ok(())
        }
    }
}

/// 1-based ranks, smallest value first; tied values share the mean of the
/// ranks they would occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn correlation(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(MetricsError::ZeroVariance {
            side: Side::Predicted,
        });
    }
    if syy == 0.0 {
        return Err(MetricsError::ZeroVariance { side: Side::Actual });
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn pearson(pairs: &ScorePairs<'_>) -> Result<f64, MetricsError> {
    pairs.require(2)?;
    correlation(pairs.predicted, pairs.actual)
}

pub fn spearman(pairs: &ScorePairs<'_>) -> Result<f64, MetricsError> {
    pairs.require(2)?;
    correlation(
        &average_ranks(pairs.predicted),
        &average_ranks(pairs.actual),
    )
}

pub fn mse(pairs: &ScorePairs<'_>) -> Result<f64, MetricsError> {
    pairs.require(1)?;
    let sum: f64 = pairs
        .predicted
        .iter()
        .zip(pairs.actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sum / pairs.len() as f64)
}
