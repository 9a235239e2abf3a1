//! Online SGD on single examples and mini-batch link-prediction training.

pub mod config;
pub mod negatives;
pub mod online;
pub mod trainer;

pub use config::{Optimizer, OptimizerKind, TrainConfig};
pub use negatives::{sample_negative, NegativeSampler};
pub use online::{online_sgd, online_sgd_graph, Differentiable, LinearModel, OnlineSgdResult};
pub use trainer::{train_link_prediction, EpochRecord, TrainHistory, TrainOutcome};
