//! Temporal graph learning: interaction storage, temporal neighbor sampling,
//! hand-differentiated encoders, training, feature-label alignment analysis
//! and link-prediction metrics.

pub mod analysis;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod graph;
pub mod models;
pub mod rng;
pub mod sampling;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
