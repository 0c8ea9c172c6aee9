//! Teacher-generated regression fixtures.
//!
//! Features are i.i.d. standard normal; the short-term score is
//! `sigmoid(w·x) + N(0, σ²)` clamped to [0, 1] and the long-term score uses
//! the same teacher at half the slope. With `w_i ~ N(0, 1/dim)` the logit
//! `w·x` is roughly standard normal, so scores spread over about [0.2, 0.8].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{LabeledDataset, LabeledRecord};
use crate::train::{self, Checkpoint, CheckpointMeta, TrainConfig, TrainError};

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Teacher weights with `w_i ~ N(0, 1/dim)`.
pub fn teacher_weights(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (dim as f64).sqrt();
    (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// A teacher correlated with `base`: `√(1-ρ²)·base + ρ·fresh`, where `fresh`
/// is an independent draw. Small `mix` means a closely related task.
pub fn related_weights(base: &[f64], mix: f64, seed: u64) -> Vec<f64> {
    let fresh = teacher_weights(base.len(), seed);
    let keep = (1.0 - mix * mix).max(0.0).sqrt();
    base.iter()
        .zip(&fresh)
        .map(|(b, f)| keep * b + mix * f)
        .collect()
}

/// `n` records with ids `{prefix}{i}`.
pub fn teacher_dataset(
    n: usize,
    weights: &[f64],
    noise_sigma: f64,
    seed: u64,
    prefix: &str,
) -> LabeledDataset {
    let dim = weights.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).expect("non-negative noise");
    let records = (0..n)
        .map(|i| {
            let features: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let logit: f64 = features.iter().zip(weights).map(|(x, w)| x * w).sum();
            let short = (sigmoid(logit) + noise.sample(&mut rng)).clamp(0.0, 1.0);
            let long = (sigmoid(0.5 * logit) + noise.sample(&mut rng)).clamp(0.0, 1.0);
            LabeledRecord {
                video_id: format!("{prefix}{i}"),
                features,
                short_term: short,
                long_term: long,
            }
        })
        .collect();
    LabeledDataset::new(records, dim).expect("generated ids are unique")
}

/// Every score fixed at `value`.
pub fn constant_dataset(
    n: usize,
    dim: usize,
    value: f64,
    seed: u64,
    prefix: &str,
) -> LabeledDataset {
    let mut ds = teacher_dataset(n, &vec![0.0; dim], 0.0, seed, prefix)
        .records()
        .to_vec();
    for r in &mut ds {
        r.short_term = value;
        r.long_term = value;
    }
    LabeledDataset::new(ds, dim).expect("generated ids are unique")
}

/// Train/validation pair used for the learnability check: 16 features,
/// σ = 0.02, 500 training and 100 validation records from one teacher.
pub fn learnability_fixture(seed: u64) -> (LabeledDataset, LabeledDataset) {
    const DIM: usize = 16;
    let w = teacher_weights(DIM, seed);
    (
        teacher_dataset(500, &w, 0.02, seed.wrapping_add(1), "train"),
        teacher_dataset(100, &w, 0.02, seed.wrapping_add(2), "val"),
    )
}

/// Two related teacher tasks for transfer experiments.
#[derive(Debug, Clone)]
pub struct TransferTasks {
    /// Large pretraining set from teacher A, with its validation split.
    pub pretrain: LabeledDataset,
    pub pretrain_val: LabeledDataset,
    /// Small training set and held-out validation set from teacher B.
    pub target_train: LabeledDataset,
    pub target_val: LabeledDataset,
}

/// 16 features; teacher B mixes teacher A with a fresh direction at weight
/// 0.3. Sizes: 5,000 pretraining records (500 validation), 200 target
/// training records, 500 target validation records.
pub fn transfer_tasks(seed: u64) -> TransferTasks {
    const DIM: usize = 16;
    let base = seed.wrapping_mul(1000);
    let wa = teacher_weights(DIM, base);
    let wb = related_weights(&wa, 0.3, base + 1);
    TransferTasks {
        pretrain: teacher_dataset(5000, &wa, 0.02, base + 2, "a"),
        pretrain_val: teacher_dataset(500, &wa, 0.02, base + 3, "aval"),
        target_train: teacher_dataset(200, &wb, 0.02, base + 4, "b"),
        target_val: teacher_dataset(500, &wb, 0.02, base + 5, "bval"),
    }
}

/// Best validation Spearman on the target task for both arms of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferTrial {
    pub scratch: f64,
    pub fine_tuned: f64,
}

/// One paired run on [`transfer_tasks`]`(seed)`: pretrain on teacher A for
/// `pretrain_epochs`, then train on the 200 teacher-B records twice with the
/// default configuration, once from a fresh initialisation and once from the
/// pretrained weights. Both arms use `seed` and select on the same
/// validation set.
pub fn transfer_trial(seed: u64, pretrain_epochs: usize) -> Result<TransferTrial, TrainError> {
    let tasks = transfer_tasks(seed);
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let pre_cfg = TrainConfig {
        epochs: pretrain_epochs,
        ..cfg.clone()
    };
    let (pre, pre_hist) = train::train(&tasks.pretrain, &tasks.pretrain_val, &pre_cfg)?;
    let checkpoint = Checkpoint {
        model: pre,
        meta: CheckpointMeta {
            target: Some(cfg.target),
            seed,
            epochs_run: pretrain_epochs as u32,
            best_val_spearman: pre_hist.best().val_spearman,
        },
    };
    let best = |h: &train::TrainHistory| h.best().val_spearman.unwrap_or(f64::NAN);
    let (_, scratch) = train::train(&tasks.target_train, &tasks.target_val, &cfg)?;
    let (_, tuned) = train::fine_tune(&checkpoint, &tasks.target_train, &tasks.target_val, &cfg)?;
    Ok(TransferTrial {
        scratch: best(&scratch),
        fine_tuned: best(&tuned),
    })
}
