//! Independent oracles shared by the integration suites.
//!
//! Nothing here calls into the code path it checks: gradients come from
//! central differences of the loss, ranks from direct counting, and
//! correlations from raw-sum formulas.

#![allow(dead_code)]

use std::f64::consts::PI;

use memorability::motion::FrameGray;
use memorability::nn::{Loss, Matrix, MlpModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-6;
pub const FD_TOLERANCE: f64 = 1e-5;
/// Gradients smaller than this are compared absolutely: central differences
/// carry ~1e-10 of rounding noise, which is not meaningful relative to a
/// value near zero.
pub const FD_FLOOR: f64 = 1e-4;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

fn loss_at(model: &mut MlpModel, x: &Matrix, y: &Matrix, loss: Loss) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pred = model.forward_train(x, &mut rng).unwrap();
    loss.compute(&pred, y).unwrap().0
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GradCheck {
    pub max_param_error: f64,
    pub max_input_error: f64,
    pub checked: usize,
}

/// Compares every analytic parameter and input gradient with central
/// differences. The model must have dropout disabled.
pub fn gradient_check(model: &MlpModel, x: &Matrix, y: &Matrix, loss: Loss) -> GradCheck {
    let mut analytic_model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pred = analytic_model.forward_train(x, &mut rng).unwrap();
    let (_, grad) = loss.compute(&pred, y).unwrap();
    let dx = analytic_model.backward(&grad).unwrap();
    let grads = analytic_model.param_grads();

    let mut out = GradCheck::default();
    let mut probe = model.clone();
    for (t, (_, g)) in grads.iter().enumerate() {
        for (k, &analytic) in g.iter().enumerate() {
            let orig = probe.params_mut()[t].value[k];
            probe.params_mut()[t].value[k] = orig + FD_STEP;
            let up = loss_at(&mut probe, x, y, loss);
            probe.params_mut()[t].value[k] = orig - FD_STEP;
            let down = loss_at(&mut probe, x, y, loss);
            probe.params_mut()[t].value[k] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            out.max_param_error = out.max_param_error.max(relative_error(analytic, numeric));
            out.checked += 1;
        }
    }
    for k in 0..x.as_slice().len() {
        let mut xp = x.clone();
        xp.as_mut_slice()[k] += FD_STEP;
        let up = loss_at(&mut probe, &xp, y, loss);
        xp.as_mut_slice()[k] -= 2.0 * FD_STEP;
        let down = loss_at(&mut probe, &xp, y, loss);
        let numeric = (up - down) / (2.0 * FD_STEP);
        out.max_input_error = out
            .max_input_error
            .max(relative_error(dx.as_slice()[k], numeric));
        out.checked += 1;
    }
    out
}

/// A random model with every width ≤ 8, perturbed away from its
/// initialisation so BatchNorm's affine parameters matter, plus a batch of
/// 4–8 inputs and targets in (0, 1).
pub fn random_tiny_case(seed: u64) -> (MlpModel, Matrix, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = rng.random_range(1..=3);
    let mut dims: Vec<usize> = (0..depth).map(|_| rng.random_range(2..=8)).collect();
    dims.push(1);
    let mut model = MlpModel::init(&dims, seed).unwrap();
    model.set_dropout(0.0).unwrap();
    for p in model.params_mut() {
        for v in p.value.iter_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    let batch = rng.random_range(4..=8);
    let x = Matrix::from_fn(batch, dims[0], |_, _| rng.random_range(-2.0..2.0));
    let y = Matrix::from_fn(batch, 1, |_, _| rng.random_range(0.05..0.95));
    (model, x, y)
}

/// Rank by counting: `#smaller + (#equal + 1) / 2`.
pub fn brute_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&v| {
            let less = xs.iter().filter(|&&u| u < v).count() as f64;
            let equal = xs.iter().filter(|&&u| u == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Pearson from raw sums; `None` when either side is constant.
pub fn brute_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

pub fn brute_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    brute_pearson(&brute_ranks(x), &brute_ranks(y))
}

pub fn brute_mse(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64
}

/// Every sequence of length `n` over `0..alphabet`.
pub fn all_sequences(n: usize, alphabet: usize) -> Vec<Vec<f64>> {
    let total = alphabet.pow(n as u32);
    (0..total)
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let d = code % alphabet;
                    code /= alphabet;
                    d as f64
                })
                .collect()
        })
        .collect()
}

/// Horizontal sinusoid translated by `shift` pixels to the right.
pub fn sinusoid_frame(width: usize, height: usize, period: f64, shift: f64) -> FrameGray {
    let px = (0..height)
        .flat_map(|_| {
            (0..width).map(move |c| 0.5 + 0.5 * (2.0 * PI * (c as f64 - shift) / period).sin())
        })
        .collect();
    FrameGray::new(width, height, px).unwrap()
}

/// `count` frames moving right at `speed` pixels per frame.
pub fn translating_sequence(count: usize, speed: f64, period: f64) -> Vec<FrameGray> {
    (0..count)
        .map(|t| sinusoid_frame(64, 64, period, speed * t as f64))
        .collect()
}

/// Compares the library metrics with the brute-force versions on every pair
/// of sequences over `0..alphabet` of each length up to `max_len`. Returns
/// the number of pairs checked, or the first disagreement.
pub fn metric_sweep(max_len: usize, alphabet: usize, tol: f64) -> Result<usize, String> {
    use memorability::metrics::{mse, pearson, spearman, MetricsError, ScorePairs};
    let mut checked = 0;
    for n in 1..=max_len {
        let seqs = all_sequences(n, alphabet);
        for x in &seqs {
            for y in &seqs {
                let pairs = ScorePairs::new(x, y).map_err(|e| format!("{x:?} {y:?}: {e}"))?;
                let cases = [
                    ("pearson", pearson(&pairs), brute_pearson(x, y)),
                    ("spearman", spearman(&pairs), brute_spearman(x, y)),
                ];
                for (name, got, want) in cases {
                    match (got, want) {
                        (Ok(g), Some(w)) if (g - w).abs() <= tol => {}
                        // one point has no spread on either side
                        (Err(MetricsError::TooShort { .. }), None) if n < 2 => {}
                        (Err(MetricsError::ZeroVariance { .. }), None) => {}
                        (g, w) => {
                            return Err(format!("{name} {x:?} {y:?}: library {g:?}, oracle {w:?}"))
                        }
                    }
                }
                let m = mse(&pairs).map_err(|e| format!("mse {x:?} {y:?}: {e}"))?;
                if (m - brute_mse(x, y)).abs() > tol {
                    return Err(format!(
                        "mse {x:?} {y:?}: library {m}, oracle {}",
                        brute_mse(x, y)
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Spearman must not change when one side goes through `v ↦ v³ + 5`.
/// Values are quarter-integers so the transform is exact and ties survive.
pub fn monotone_invariance(cases: usize, seed: u64, tol: f64) -> Result<usize, String> {
    use memorability::metrics::{spearman, ScorePairs};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    while checked < cases {
        let n = rng.random_range(2..40);
        let mut draw = || -> Vec<f64> {
            (0..n)
                .map(|_| rng.random_range(-20i32..=20) as f64 / 4.0)
                .collect()
        };
        let (x, y) = (draw(), draw());
        let fx: Vec<f64> = x.iter().map(|v| v * v * v + 5.0).collect();
        let base = spearman(&ScorePairs::new(&x, &y).unwrap());
        let moved = spearman(&ScorePairs::new(&fx, &y).unwrap());
        match (base, moved) {
            (Ok(a), Ok(b)) if (a - b).abs() <= tol => checked += 1,
            // constant draws are degenerate on both sides; redraw
            (Err(_), Err(_)) => {}
            (a, b) => return Err(format!("{x:?} vs {y:?}: {a:?} became {b:?}")),
        }
    }
    Ok(checked)
}
