//! Encoders, the link classifier, hand-written backward passes and the
//! finite-difference oracle used to check them.

pub mod activation;
pub mod checkpoint;
pub mod classifier;
pub mod config;
pub mod features;
pub mod gnn;
pub mod grad;
pub mod input;
pub mod layout;
pub(crate) mod linalg;
pub mod memory;
pub mod model;
pub mod rnn;
pub mod stone;
pub mod time_encoding;

pub use activation::Activation;
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use config::{AlphaMode, HeadKind, Method, ModelConfig, DEFAULT_HIDDEN, DEFAULT_K, DEFAULT_TIME_DIM};
pub use features::{build_event_features, EventFeatures, FeatureLayout, FeatureTree};
pub use grad::{
    finite_difference_grad, loss_derivative, loss_value, model_finite_difference_grad, model_grad,
    relative_inf_error, GradTarget, LossKind,
};
pub use input::{link_input, node_input};
pub use layout::{ParamBlock, ParamLayout};
pub use memory::{MemoryInput, MemoryState, MemoryUpdate};
pub use model::{ForwardCache, Model, ModelInput, NodeInput};
pub use time_encoding::TimeEncoder;
