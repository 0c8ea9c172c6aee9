//! Video memorability regression over pre-extracted spatio-temporal clip
//! features.
//!
//! The crate is organised around the pipeline:
//!
//! * [`data`] reads feature and label files, joins them by video id and
//!   produces deterministic train/validation splits.
//! * [`nn`] holds the dense math: a BatchNorm → Dropout → Linear → activation
//!   multilayer perceptron with a sigmoid head, hand-written backward passes,
//!   losses and optimizers.
//! * [`train`] runs the epoch loop with validation-Spearman model selection,
//!   evaluates, predicts, fine-tunes and serializes checkpoints.
//! * [`metrics`] provides Spearman (average ranks), Pearson and MSE.
//! * [`motion`] computes Horn–Schunck optical flow on grayscale PGM frames and
//!   the per-video mean flow magnitude statistic with histogram export.
//! * [`synthetic`] generates the teacher-network fixtures used by tests,
//!   examples and the guide.
//!
//! ```
//! use memorability::nn::{MlpModel, DEFAULT_DIMS};
//!
//! let model = MlpModel::init(&DEFAULT_DIMS, 0).unwrap();
//! assert_eq!(model.param_count(), 2_371_073);
//! ```

pub mod data;
pub mod metrics;
pub mod motion;
pub mod nn;
pub mod synthetic;
pub mod train;

pub use data::{FeatureRecord, LabelRecord, LabeledDataset, SplitSpec, Target};
pub use metrics::{MetricsError, ScorePairs};
pub use nn::{Matrix, MlpModel};
pub use train::{MetricsReport, TrainConfig, TrainHistory};
