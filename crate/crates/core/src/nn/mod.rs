//! Dense f64 math and the memorability regressor.

mod layers;
mod loss;
mod matrix;
mod model;
mod optim;

use thiserror::Error;

pub use layers::{
    Activation, BatchNormCache, BatchNormLayer, DropoutLayer, LinearLayer, BATCH_NORM_EPS,
    BATCH_NORM_MOMENTUM, DEFAULT_DROPOUT, SIGMOID_MARGIN,
};
pub use loss::{l1_loss, mse_loss, Loss};
pub use matrix::Matrix;
pub use model::{
    param_count_for, parse_dims, Block, MlpModel, ParamId, ParamKind, ParamMut, DEFAULT_DIMS,
};
pub use optim::{Adam, AdamConfig, AdamMoments, Optimizer, OptimizerKind, Sgd};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("matrix storage holds {len} values, {rows}x{cols} needs {}", rows * cols)]
    Storage {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("training forward needs at least 2 rows for batch statistics, got {rows}")]
    BatchTooSmall { rows: usize },
    #[error("backward called without a preceding training forward pass")]
    NoTrainForward,
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("dropout probability {0} outside [0, 1)")]
    InvalidDropout(f64),
    #[error("block {block} does not exist (model has {count} blocks)")]
    InvalidBlock { block: usize, count: usize },
    #[error("non-finite gradient in {param}")]
    NonFiniteGradient { param: String },
}
