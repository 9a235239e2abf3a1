//! Layered run configuration: command-line flags over a TOML file over the
//! built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use stgl_core::experiment::RunSpec;
use stgl_core::evaluation::{EvalOptions, Setting};
use stgl_core::graph::{Direction, SplitSpec, TemporalGraph};
use stgl_core::models::{
    Activation, AlphaMode, FeatureLayout, LossKind, Method, ModelConfig, DEFAULT_TIME_DIM,
};
use stgl_core::sampling::SamplingMode;
use stgl_core::training::{OptimizerKind, TrainConfig};

use crate::UsageError;

/// Parses a lowercase enum name the same way the TOML file does.
pub fn parse_name<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unrecognized value `{s}`"))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub fla: FlaSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub snapshot: Option<PathBuf>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub method: Option<Method>,
    pub hidden: Option<usize>,
    pub mlp_hidden: Option<usize>,
    pub time_dim: Option<usize>,
    pub k: Option<usize>,
    pub layers: Option<usize>,
    pub activation: Option<Activation>,
    pub residual: Option<bool>,
    pub alpha: Option<AlphaMode>,
    pub sampling: Option<SamplingMode>,
    pub hops: Option<usize>,
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub optimizer: Option<OptimizerKind>,
    pub loss: Option<LossKind>,
    pub negatives_per_positive: Option<usize>,
    pub seeds: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlaSection {
    pub n_sub: Option<usize>,
    pub jitter: Option<f64>,
    pub tau: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
    }
}

/// Model and optimization flags shared by every command that builds models.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// TOML file with [data], [model], [train] and [fla] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// stone, gnn, rnn or memory.
    #[arg(long, value_parser = parse_name::<Method>)]
    pub method: Option<Method>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub mlp_hidden: Option<usize>,
    #[arg(long)]
    pub time_dim: Option<usize>,
    /// Neighbors per query.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, value_parser = parse_name::<Activation>)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub residual: bool,
    /// Pin the slot weights at 1/K.
    #[arg(long)]
    pub fixed_alpha: bool,
    /// recent or uniform.
    #[arg(long, value_parser = parse_name::<SamplingMode>)]
    pub sampling: Option<SamplingMode>,
    #[arg(long)]
    pub hops: Option<usize>,
    /// bi or di.
    #[arg(long = "graph-direction", value_parser = parse_name::<Direction>)]
    pub direction: Option<Direction>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long = "epochs")]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// adam or sgd.
    #[arg(long, value_parser = parse_name::<OptimizerKind>)]
    pub optimizer: Option<OptimizerKind>,
    /// Seed list: `3`, `0,2,4` or the inclusive range `0..5`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Examples in the alignment Jacobian.
    #[arg(long = "nsub")]
    pub n_sub: Option<usize>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
}

/// Everything a run needs after layering.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub model: ModelConfig,
    pub time_dim: usize,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    /// None: the smaller of [`DEFAULT_N_SUB`] and the training split.
    pub n_sub: Option<usize>,
    pub jitter: f64,
    pub tau: f64,
}

pub const DEFAULT_N_SUB: usize = 5000;

impl ModelArgs {
    pub fn file(&self) -> Result<FileConfig> {
        match &self.config {
            Some(p) => FileConfig::load(p),
            None => Ok(FileConfig::default()),
        }
    }

    /// Layers flags over `file` over defaults for a graph's feature widths.
    pub fn resolve(&self, file: &FileConfig, g: &TemporalGraph) -> Result<Resolved> {
        let m = &file.model;
        let method = self.method.or(m.method).unwrap_or(Method::Stone);
        let time_dim = self.time_dim.or(m.time_dim).unwrap_or(DEFAULT_TIME_DIM);
        let mut model = ModelConfig::new(method, FeatureLayout::for_graph(g, time_dim));
        macro_rules! layer {
            ($field:ident) => {
                if let Some(v) = self.$field.or(m.$field) {
                    model.$field = v;
                }
            };
        }
        layer!(hidden);
        layer!(mlp_hidden);
        layer!(k);
        layer!(layers);
        layer!(activation);
        layer!(sampling);
        layer!(hops);
        layer!(direction);
        model.residual = self.residual || m.residual.unwrap_or(false);
        model.alpha = if self.fixed_alpha {
            AlphaMode::Fixed
        } else {
            m.alpha.unwrap_or_default()
        };
        model.validate().map_err(|e| UsageError(e.to_string()))?;

        let t = &file.train;
        let mut train = TrainConfig::default();
        macro_rules! layer_train {
            ($field:ident) => {
                if let Some(v) = self.$field.or(t.$field) {
                    train.$field = v;
                }
            };
        }
        layer_train!(lr);
        layer_train!(weight_decay);
        layer_train!(batch_size);
        layer_train!(max_epochs);
        layer_train!(patience);
        layer_train!(optimizer);
        if let Some(v) = t.loss {
            train.loss = v;
        }
        if let Some(v) = t.negatives_per_positive {
            train.negatives_per_positive = v;
        }
        train.validate().map_err(|e| UsageError(e.to_string()))?;

        let seeds = match self.seeds.as_deref().or(t.seeds.as_deref()) {
            Some(s) => parse_seeds(s)?,
            None => vec![0],
        };
        let f = &file.fla;
        let tau = self.tau.or(f.tau).unwrap_or(1.0);
        if tau < 1.0 {
            return Err(UsageError(format!("tau must be at least 1, got {tau}")).into());
        }
        Ok(Resolved {
            model,
            time_dim,
            train,
            seeds,
            n_sub: self.n_sub.or(f.n_sub),
            jitter: self.jitter.or(f.jitter).unwrap_or(0.0),
            tau,
        })
    }
}

impl Resolved {
    /// Rounded down to an even count so every positive keeps its negative.
    pub fn n_sub_for(&self, split: &SplitSpec) -> usize {
        self.n_sub
            .unwrap_or_else(|| DEFAULT_N_SUB.min(split.train().len()) & !1)
    }

    /// `n_sub` of 0 skips the alignment score.
    pub fn run_spec(&self, eval: EvalOptions, n_sub: usize) -> RunSpec {
        RunSpec {
            model: self.model.clone(),
            train: self.train.clone(),
            eval,
            n_sub,
            jitter: self.jitter,
            tau: self.tau,
        }
    }
}

pub fn default_eval(setting: Setting, rank_negatives: usize) -> EvalOptions {
    EvalOptions {
        setting,
        rank_negatives,
        ..EvalOptions::default()
    }
}

/// `3`, `0,2,4`, or `a..b` with both ends included.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || UsageError(format!("bad seed list `{s}` (use 3, 0,2,4 or 0..5)"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad().into());
        }
        return Ok((a..=b).collect());
    }
    let seeds = s
        .split(',')
        .map(|x| x.trim().parse::<u64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    if seeds.is_empty() {
        return Err(bad().into());
    }
    Ok(seeds)
}
