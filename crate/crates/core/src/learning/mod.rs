//! Worker-side learning: the multinomial logistic-regression model, datasets
//! and their partitioning across satellites, and the local SGD procedure.

mod dataset;
pub mod idx;
mod model;
mod partition;
mod train;

use thiserror::Error;

pub use dataset::{synth_dataset, Dataset, SyntheticBlobs};
pub use idx::{load_idx, IdxError};
pub use model::{
    evaluate, model_loss, param_count, predict_proba, surrogate_gradient, Evaluation, ParamVector,
};
pub use partition::{partition, PartitionMode, PartitionSpec, ShellClasses};
pub use train::{local_train, train_centralized, TrainConfig};

#[derive(Debug, Error)]
pub enum LearningError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training diverged: non-finite parameters after {steps} SGD steps")]
    Diverged { steps: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("partitioning failed: {0}")]
    Partition(String),
    #[error(transparent)]
    Idx(#[from] IdxError),
}
