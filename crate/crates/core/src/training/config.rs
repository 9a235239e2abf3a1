use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::LossKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    /// L2 penalty added to the gradient.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub loss: LossKind,
    pub negatives_per_positive: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            weight_decay: 1e-6,
            batch_size: 600,
            max_epochs: 100,
            patience: 20,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            loss: LossKind::Bce,
            negatives_per_positive: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::validation(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::validation("weight decay must be non-negative"));
        }
        if self.patience == 0 {
            return Err(Error::validation("patience must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch size must be at least 1"));
        }
        if self.negatives_per_positive == 0 {
            return Err(Error::validation("need at least one negative per positive"));
        }
        Ok(())
    }
}

/// Plain SGD or Adam (beta1 0.9, beta2 0.999, eps 1e-8), both with L2
/// weight decay folded into the gradient.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd {
        lr: f64,
        weight_decay: f64,
    },
    Adam {
        lr: f64,
        weight_decay: f64,
        m: Vec<f64>,
        v: Vec<f64>,
        t: i32,
    },
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, weight_decay: f64, num_params: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr, weight_decay },
            OptimizerKind::Adam => Optimizer::Adam {
                lr,
                weight_decay,
                m: vec![0.0; num_params],
                v: vec![0.0; num_params],
                t: 0,
            },
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        match self {
            Optimizer::Sgd { lr, weight_decay } => {
                for (p, g) in theta.iter_mut().zip(grad) {
                    *p -= *lr * (g + *weight_decay * *p);
                }
            }
            Optimizer::Adam {
                lr,
                weight_decay,
                m,
                v,
                t,
            } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                for i in 0..theta.len() {
                    let g = grad[i] + *weight_decay * theta[i];
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
                    let mhat = m[i] / c1;
                    let vhat = v[i] / c2;
                    theta[i] -= *lr * mhat / (vhat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}
