use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use memorability::data::{self, LabeledDataset, SplitSpec, Target};
use memorability::motion::{self, FlowParams};
use memorability::train::{
    self, format_history, format_metric_row, load_checkpoint, save_checkpoint, CheckpointMeta,
    TrainConfig, TrainHistory, METRIC_HEADER,
};
use memorability::MlpModel;

use crate::{
    DataArgs, EvaluateArgs, FinetuneArgs, InspectArgs, MotionArgs, OptimArgs, PredictArgs,
    SplitArgs, TrainArgs,
};

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn load_labeled(features: &Path, labels: &Path, dim: usize) -> Result<LabeledDataset> {
    let f = data::load_features(features, dim)?;
    let l = data::load_labels(labels)?;
    let joined = data::join(&f, &l)?;
    if joined.dropped_features > 0 || joined.dropped_labels > 0 {
        eprintln!(
            "warning: {} feature rows without labels and {} label rows without features were dropped ({} / {})",
            joined.dropped_features,
            joined.dropped_labels,
            features.display(),
            labels.display()
        );
    }
    Ok(joined.dataset)
}

fn load_train_val(args: &DataArgs, split_seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    let all = load_labeled(&args.features, &args.labels, args.feature_dim)?;
    match (&args.val_features, &args.val_labels, args.val_fraction) {
        (Some(vf), Some(vl), _) => Ok((all, load_labeled(vf, vl, args.feature_dim)?)),
        (_, _, Some(fraction)) => Ok(data::split(
            &all,
            SplitSpec {
                val_fraction: fraction,
                seed: split_seed,
            },
        )?),
        // clap enforces one of the two sources
        _ => bail!("either --val-features/--val-labels or --val-fraction is required"),
    }
}

fn base_config(optim: &OptimArgs, target: Target) -> TrainConfig {
    TrainConfig {
        epochs: optim.epochs,
        batch_size: optim.batch_size,
        loss: optim.loss.into(),
        optimizer: optim.optimizer.into(),
        lr: optim.lr,
        seed: optim.seed,
        target,
        ..TrainConfig::default()
    }
}

fn finish_training(
    optim: &OptimArgs,
    cfg: &TrainConfig,
    model: &MlpModel,
    history: &TrainHistory,
) -> Result<()> {
    let meta = CheckpointMeta {
        target: Some(cfg.target),
        seed: cfg.seed,
        epochs_run: u32::try_from(cfg.epochs)
            .context("--epochs does not fit the checkpoint format")?,
        best_val_spearman: history.best().val_spearman,
    };
    save_checkpoint(&optim.out, model, &meta)?;
    let history_path = optim
        .history
        .clone()
        .unwrap_or_else(|| with_suffix(&optim.out, ".history.csv"));
    write_file(&history_path, &format_history(history))?;
    match history.best().val_spearman {
        Some(s) => println!(
            "best epoch {} of {}: val spearman {s:?}",
            history.best_epoch + 1,
            cfg.epochs
        ),
        None => println!(
            "val spearman undefined in every epoch; kept final epoch {}",
            cfg.epochs
        ),
    }
    println!("checkpoint written to {}", optim.out.display());
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<()> {
    let (train_set, val_set) = load_train_val(&args.data, args.optim.seed)?;
    let cfg = TrainConfig {
        hidden: args.hidden.0,
        dropout: args.dropout,
        ..base_config(&args.optim, args.data.target.into())
    };
    let (model, history) = train::train(&train_set, &val_set, &cfg)?;
    finish_training(&args.optim, &cfg, &model, &history)
}

pub fn finetune(args: FinetuneArgs) -> Result<()> {
    let ck = load_checkpoint(&args.checkpoint)?;
    let dim = ck.model.input_dim();
    if dim != args.data.feature_dim {
        bail!(
            "checkpoint {} expects {dim} input features but --feature-dim is {}",
            args.checkpoint.display(),
            args.data.feature_dim
        );
    }
    let (train_set, val_set) = load_train_val(&args.data, args.optim.seed)?;
    let cfg = TrainConfig {
        freeze_blocks: args.freeze.0,
        dropout: args.dropout.unwrap_or(ck.model.dropout()),
        ..base_config(&args.optim, args.data.target.into())
    };
    let (model, history) = train::fine_tune(&ck, &train_set, &val_set, &cfg)?;
    finish_training(&args.optim, &cfg, &model, &history)
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let ck = load_checkpoint(&args.checkpoint)?;
    let dataset =
        load_labeled(&args.features, &args.labels, ck.model.input_dim()).with_context(|| {
            format!(
                "checkpoint {} expects {} input features",
                args.checkpoint.display(),
                ck.model.input_dim()
            )
        })?;
    let report = train::evaluate(&ck.model, &dataset, args.target.into())?;
    let text = format!(
        "{METRIC_HEADER}\n{}\n",
        format_metric_row(&args.run, &report)
    );
    print!("{text}");
    if let Some(out) = &args.out {
        write_file(out, &text)?;
    }
    for (field, value) in [("spearman", &report.spearman), ("pearson", &report.pearson)] {
        if let Err(e) = value {
            bail!("{field} is degenerate: {e}");
        }
    }
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let ck = load_checkpoint(&args.checkpoint)?;
    let dim = ck.model.input_dim();
    let features = data::load_features_allow_empty(&args.features, dim).with_context(|| {
        format!(
            "checkpoint {} expects {dim} input features",
            args.checkpoint.display()
        )
    })?;
    let mut out = String::new();
    for (id, score) in train::predict(&ck.model, &features)? {
        let _ = writeln!(out, "{id},{score:?}");
    }
    write_file(&args.out, &out)?;
    println!(
        "{} predictions written to {}",
        features.len(),
        args.out.display()
    );
    Ok(())
}

pub fn motion_stats(args: MotionArgs) -> Result<()> {
    let params = FlowParams {
        alpha: args.alpha,
        iterations: args.iterations,
    };
    let summary = motion::analyze_root(&args.frames_root, &params)?;
    for (id, frames) in &summary.skipped {
        eprintln!("skipped {id}: {frames} frame(s), need at least 2");
    }
    if summary.videos.is_empty() {
        bail!(
            "no video with at least 2 frames under {}",
            args.frames_root.display()
        );
    }
    let values: Vec<f64> = summary
        .videos
        .iter()
        .map(|v| v.mean_flow_magnitude)
        .collect();
    let bins = motion::flow_histogram(&values, args.bin_width)?;
    let videos_path = with_suffix(&args.out, ".videos.csv");
    let hist_path = with_suffix(&args.out, ".histogram.csv");
    write_file(&videos_path, &motion::format_video_stats(&summary.videos))?;
    write_file(&hist_path, &motion::format_histogram(&bins))?;
    println!(
        "{} videos processed, {} skipped; wrote {} and {}",
        summary.videos.len(),
        summary.skipped.len(),
        videos_path.display(),
        hist_path.display()
    );
    Ok(())
}

pub fn split(args: SplitArgs) -> Result<()> {
    let all = load_labeled(&args.features, &args.labels, args.feature_dim)?;
    let (train_set, val_set) = data::split(
        &all,
        SplitSpec {
            val_fraction: args.val_fraction,
            seed: args.seed,
        },
    )?;
    for (name, ds) in [("train", &train_set), ("val", &val_set)] {
        let features = with_suffix(&args.out, &format!(".{name}.features.csv"));
        let labels = with_suffix(&args.out, &format!(".{name}.labels.csv"));
        data::write_features(&features, &ds.feature_records())?;
        data::write_labels(&labels, &ds.label_records())?;
    }
    println!(
        "{} train / {} validation records",
        train_set.len(),
        val_set.len()
    );
    Ok(())
}

pub fn inspect(args: InspectArgs) -> Result<()> {
    let ck = load_checkpoint(&args.checkpoint)?;
    let dims: Vec<String> = ck.model.dims().iter().map(usize::to_string).collect();
    println!("dims: {}", dims.join(","));
    println!("parameters: {}", ck.model.param_count());
    println!("dropout: {:?}", ck.model.dropout());
    println!(
        "target: {}",
        ck.meta.target.map_or("unspecified", Target::as_str)
    );
    println!("seed: {}", ck.meta.seed);
    println!("epochs run: {}", ck.meta.epochs_run);
    match ck.meta.best_val_spearman {
        Some(s) => println!("best val spearman: {s:?}"),
        None => println!("best val spearman: none"),
    }
    Ok(())
}
