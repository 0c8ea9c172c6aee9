//! Epoch loop, model selection, evaluation and fine-tuning.
//!
//! One model is trained per target. After every epoch the model is scored on
//! the validation set and the snapshot with the highest validation Spearman
//! (first occurrence on ties) is what [`train`] returns, not the last epoch.

mod checkpoint;
mod report;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{DataError, FeatureRecord, LabeledDataset, Target};
use crate::metrics::{self, MetricsError, ScorePairs};
use crate::nn::{Loss, Matrix, MlpModel, NnError, Optimizer, OptimizerKind, DEFAULT_DROPOUT};

pub use checkpoint::{
    decode, encode, encoded_len, load_checkpoint, save_checkpoint, Checkpoint, CheckpointError,
    CheckpointMeta, FORMAT_VERSION, MAGIC,
};
pub use report::{
    format_history, format_metric_row, format_real, format_table_row, METRIC_HEADER, TABLE_HEADER,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("feature dimension mismatch: model expects {model}, {what} has {data}")]
    DimensionMismatch {
        what: &'static str,
        model: usize,
        data: usize,
    },
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("{0} is empty")]
    EmptyDataset(&'static str),
    #[error("training set has {len} records, fewer than batch size {batch_size}")]
    BatchLargerThanTrainSet { len: usize, batch_size: usize },
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;

/// The only selection rule: highest validation Spearman.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionMetric {
    #[default]
    ValidationSpearman,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: Loss,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub seed: u64,
    pub target: Target,
    pub selection_metric: SelectionMetric,
    /// Widths between the input and the single output unit.
    pub hidden: Vec<usize>,
    pub dropout: f64,
    /// 1-based block indices excluded from updates.
    pub freeze_blocks: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            loss: Loss::L1,
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            seed: 0,
            target: Target::ShortTerm,
            selection_metric: SelectionMetric::ValidationSpearman,
            hidden: vec![512, 512],
            dropout: DEFAULT_DROPOUT,
            freeze_blocks: Vec::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_blocks: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(TrainError::Config(format!(
                "batch size {} is below 2 (batch statistics need two rows)",
                self.batch_size
            )));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(TrainError::Config(format!(
                "learning rate {} is invalid",
                self.lr
            )));
        }
        if let Some(b) = self.freeze_blocks.iter().find(|&&b| b == 0 || b > n_blocks) {
            return Err(TrainError::Config(format!(
                "cannot freeze block {b}; blocks are numbered 1..={n_blocks}"
            )));
        }
        Ok(())
    }

    pub fn dims_for(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(1);
        dims
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub val_spearman: Option<f64>,
    pub val_pearson: Option<f64>,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 0-based index into `epochs`.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch]
    }
}

/// Spearman/Pearson carry their own error so a constant predictor still
/// yields a report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub count: usize,
    pub spearman: Result<f64, MetricsError>,
    pub pearson: Result<f64, MetricsError>,
    pub mse: f64,
}

impl MetricsReport {
    pub fn is_degenerate(&self) -> bool {
        self.spearman.is_err() || self.pearson.is_err()
    }
}

fn batch_matrix(dim: usize, rows: impl IntoIterator<Item = usize>, ds: &LabeledDataset) -> Matrix {
    Matrix::from_rows(
        dim,
        rows.into_iter()
            .map(|i| ds.records()[i].features.as_slice()),
    )
    .expect("dataset rows share feature_dim")
}

fn check_dim(model: &MlpModel, what: &'static str, data: usize) -> Result<()> {
    if model.input_dim() != data {
        return Err(TrainError::DimensionMismatch {
            what,
            model: model.input_dim(),
            data,
        });
    }
    Ok(())
}

/// Eval-mode predictions for the whole dataset, in record order.
pub fn predict_dataset(model: &MlpModel, dataset: &LabeledDataset) -> Result<Vec<f64>> {
    check_dim(model, "dataset", dataset.feature_dim())?;
    let x = batch_matrix(dataset.feature_dim(), 0..dataset.len(), dataset);
    Ok(model.forward_eval(&x)?.into_vec())
}

pub fn evaluate(
    model: &MlpModel,
    dataset: &LabeledDataset,
    target: Target,
) -> Result<MetricsReport> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset("evaluation set"));
    }
    let pred = predict_dataset(model, dataset)?;
    let actual = dataset.targets(target);
    let pairs = ScorePairs::new(&pred, &actual).map_err(|e| TrainError::Config(e.to_string()))?;
    Ok(MetricsReport {
        count: pred.len(),
        spearman: metrics::spearman(&pairs),
        pearson: metrics::pearson(&pairs),
        mse: metrics::mse(&pairs).map_err(|e| TrainError::Config(e.to_string()))?,
    })
}

/// Scores in input order. Empty input gives empty output.
pub fn predict(model: &MlpModel, features: &[FeatureRecord]) -> Result<Vec<(String, f64)>> {
    const CHUNK: usize = 256;
    let dim = model.input_dim();
    if let Some(bad) = features.iter().find(|f| f.features.len() != dim) {
        return Err(TrainError::DimensionMismatch {
            what: "feature records",
            model: dim,
            data: bad.features.len(),
        });
    }
    let mut out = Vec::with_capacity(features.len());
    for chunk in features.chunks(CHUNK) {
        let x = Matrix::from_rows(dim, chunk.iter().map(|f| f.features.as_slice()))?;
        let y = model.forward_eval(&x)?;
        out.extend(chunk.iter().map(|f| f.video_id.clone()).zip(y.into_vec()));
    }
    Ok(out)
}

/// Fresh model from `config.seed`, trained on `train_set`, selected on
/// `val_set`.
pub fn train(
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    let dims = config.dims_for(train_set.feature_dim());
    let mut model = MlpModel::init(&dims, config.seed)?;
    model.set_dropout(config.dropout)?;
    run(model, train_set, val_set, config)
}

/// Continues training from a checkpoint with fresh optimizer state. Blocks in
/// `config.freeze_blocks` are left bit-identical. The checkpoint's layer
/// widths take precedence over `config.hidden`.
pub fn fine_tune(
    checkpoint: &Checkpoint,
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    checkpoint.ensure_input_dim(train_set.feature_dim())?;
    let mut model = checkpoint.model.clone();
    model.set_dropout(config.dropout)?;
    run(model, train_set, val_set, config)
}

fn run(
    mut model: MlpModel,
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    config.validate(model.blocks().len())?;
    model.set_frozen(&config.freeze_blocks)?;
    if val_set.is_empty() {
        return Err(TrainError::EmptyValidation);
    }
    check_dim(&model, "training set", train_set.feature_dim())?;
    check_dim(&model, "validation set", val_set.feature_dim())?;
    let n = train_set.len();
    if n < config.batch_size {
        return Err(TrainError::BatchLargerThanTrainSet {
            len: n,
            batch_size: config.batch_size,
        });
    }

    let dim = train_set.feature_dim();
    let targets = train_set.targets(config.target);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut optimizer = Optimizer::new(config.optimizer, config.lr);
    let mut order: Vec<usize> = (0..n).collect();

    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, MlpModel)> = None;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in order.chunks(config.batch_size) {
            if batch.len() < 2 {
                continue;
            }
            let x = batch_matrix(dim, batch.iter().copied(), train_set);
            let y = Matrix::column(batch.iter().map(|&i| targets[i]).collect());
            let pred = model.forward_train(&x, &mut rng)?;
            let (loss, grad) = config.loss.compute(&pred, &y)?;
            model.backward(&grad)?;
            optimizer.step(&mut model)?;
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
        }

        let report = evaluate(&model, val_set, config.target)?;
        let spearman = report.spearman.ok();
        if let Some(s) = spearman {
            if best.as_ref().is_none_or(|(_, b, _)| s > *b) {
                best = Some((epoch, s, model.clone()));
            }
        }
        history.push(EpochRecord {
            train_loss: loss_sum / seen as f64,
            val_spearman: spearman,
            val_pearson: report.pearson.ok(),
            val_mse: report.mse,
        });
    }

    let (best_epoch, mut selected) = match best {
        Some((e, _, m)) => (e, m),
        // no epoch had a defined Spearman: keep the final model
        None => (config.epochs - 1, model),
    };
    selected.set_frozen(&[])?;
    Ok((
        selected,
        TrainHistory {
            epochs: history,
            best_epoch,
        },
    ))
}
