//! One seeded run: initialize, score alignment at initialization, train,
//! evaluate on the test split.

use serde::{Deserialize, Serialize};

use crate::analysis::{compute_fla, generalization_error, link_jacobian, FlaReport, GeKind, GeScore};
use crate::error::Result;
use crate::evaluation::{evaluate, EvalOptions, MetricsReport};
use crate::graph::{SplitSpec, TemporalGraph};
use crate::models::{Method, Model, ModelConfig};
use crate::rng::{stream_rng, Stream};
use crate::training::{train_link_prediction, TrainConfig, TrainHistory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalOptions,
    /// Examples in the alignment Jacobian; 0 skips the alignment score.
    pub n_sub: usize,
    pub jitter: f64,
    /// Lipschitz constant of the GNN aggregation in the bound.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    pub fla: Option<FlaReport>,
    pub ge: Option<GeScore>,
    pub metrics: MetricsReport,
    pub history: TrainHistory,
    pub best_epoch: Option<usize>,
}

/// Alignment and generalization score of `model` at its current parameters.
pub fn score_alignment(
    model: &Model,
    g: &TemporalGraph,
    split: &SplitSpec,
    n_sub: usize,
    jitter: f64,
    tau: f64,
    seed: u64,
) -> Result<(FlaReport, GeScore)> {
    let j = link_jacobian(model, g, split, n_sub, seed)?;
    let fla = compute_fla(&j, jitter)?;
    let cfg = model.config();
    let ge = generalization_error(GeKind::from(cfg.method), cfg.layers, cfg.activation.rho(), tau, fla.r, n_sub)?;
    Ok((fla, ge))
}

pub fn run_experiment(g: &TemporalGraph, split: &SplitSpec, spec: &RunSpec, seed: u64) -> Result<RunRecord> {
    let mut init_rng = stream_rng(seed, Stream::Init);
    let model = Model::init(spec.model.clone(), &mut init_rng)?;
    let (fla, ge) = if spec.n_sub > 0 {
        let (f, s) = score_alignment(&model, g, split, spec.n_sub, spec.jitter, spec.tau, seed)?;
        (Some(f), Some(s))
    } else {
        (None, None)
    };
    let train_cfg = TrainConfig {
        seed,
        ..spec.train.clone()
    };
    let outcome = train_link_prediction(&model, g, split, &train_cfg)?;
    let eval = EvalOptions {
        seed,
        ..spec.eval.clone()
    };
    let metrics = evaluate(&outcome.model, g, split, &eval)?;
    Ok(RunRecord {
        method: spec.model.method,
        seed,
        fla,
        ge,
        metrics,
        history: outcome.history,
        best_epoch: outcome.best_epoch,
    })
}
