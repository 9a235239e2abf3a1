//! Link-prediction metrics and the evaluation drivers.

pub mod driver;
pub mod metrics;

pub use driver::{
    evaluate, evaluate_range, setting_filter, EvalOptions, FnScorer, LinkScorer,
    ModelScorer,
};
pub use metrics::{
    auc_roc, average_precision, rank_metrics, rank_of, MetricsReport, RankAccumulator, RankOutcome,
    Setting,
};
