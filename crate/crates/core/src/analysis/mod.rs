//! Feature-learning alignment, generalization scores and summary statistics.

pub mod fla;
pub mod ge;
pub mod jacobian;
pub mod linalg;
pub mod stats;

pub use fla::{compute_fla, min_norm_perturbation, perturbation_norm, solve_gram, FlaReport, GramSolve, JacobianMatrix, JITTER_LADDER};
pub use ge::{compose, constants, generalization_error, GeKind, GeScore};
pub use jacobian::{compute_jacobian, link_examples, link_jacobian};
pub use stats::{average_ranks, generalization_gap, pearson, spearman};
