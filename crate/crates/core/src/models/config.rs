use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::features::FeatureLayout;
use crate::error::{Error, Result};
use crate::graph::Direction;
use crate::sampling::SamplingMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Stone,
    Gnn,
    Rnn,
    Memory,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Stone, Method::Gnn, Method::Rnn, Method::Memory];

    pub fn name(self) -> &'static str {
        match self {
            Method::Stone => "stone",
            Method::Gnn => "gnn",
            Method::Rnn => "rnn",
            Method::Memory => "memory",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stone" => Ok(Method::Stone),
            "gnn" => Ok(Method::Gnn),
            "rnn" => Ok(Method::Rnn),
            "memory" => Ok(Method::Memory),
            other => Err(format!(
                "unknown method `{other}` (expected stone, gnn, rnn or memory)"
            )),
        }
    }
}

/// Whether the encoder's per-slot weights are learned or pinned at `1/K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    #[default]
    Trainable,
    Fixed,
}

/// `Link` scores a node pair through the two-layer classifier; `Node` reads a
/// scalar off a single node embedding with a linear map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    #[default]
    Link,
    Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub method: Method,
    pub features: FeatureLayout,
    /// `m` for the recurrent/message-passing families, `d_out` for stone.
    pub hidden: usize,
    pub mlp_hidden: usize,
    /// Neighbors per query (stone), fanout per level (gnn).
    pub k: usize,
    /// `L`: tree depth is `L-1` for gnn, `L-1` steps for rnn.
    pub layers: usize,
    pub activation: Activation,
    pub residual: bool,
    pub alpha: AlphaMode,
    pub head: HeadKind,
    pub sampling: SamplingMode,
    pub hops: usize,
    pub direction: Direction,
}

pub const DEFAULT_TIME_DIM: usize = 100;
pub const DEFAULT_HIDDEN: usize = 100;
pub const DEFAULT_K: usize = 20;

impl ModelConfig {
    pub fn new(method: Method, features: FeatureLayout) -> Self {
        let (layers, activation) = match method {
            Method::Stone => (2, Activation::Relu),
            Method::Gnn => (3, Activation::Relu),
            Method::Rnn => (4, Activation::Tanh),
            Method::Memory => (2, Activation::Tanh),
        };
        ModelConfig {
            method,
            features,
            hidden: DEFAULT_HIDDEN,
            mlp_hidden: DEFAULT_HIDDEN,
            k: DEFAULT_K,
            layers,
            activation,
            residual: false,
            alpha: AlphaMode::Trainable,
            head: HeadKind::Link,
            sampling: SamplingMode::Recent,
            hops: 1,
            direction: Direction::Bidirected,
        }
    }

    pub fn d_in(&self) -> usize {
        self.features.d_in()
    }

    /// Message width of the memory family: `[e | psi(dt)]`.
    pub fn d_msg(&self) -> usize {
        self.features.d_e + self.features.d_t
    }

    /// Width of the per-node embedding fed to the head.
    pub fn embed_dim(&self) -> usize {
        self.hidden
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.mlp_hidden == 0 {
            return Err(Error::validation("hidden widths must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::validation("K must be at least 1"));
        }
        if self.d_in() == 0 && self.method != Method::Memory {
            return Err(Error::validation("event features are empty; use a time dimension >= 1"));
        }
        match self.method {
            Method::Gnn | Method::Rnn if self.layers < 2 => {
                return Err(Error::validation(format!(
                    "{} needs L >= 2, got {}",
                    self.method, self.layers
                )));
            }
            _ => {}
        }
        if !(1..=2).contains(&self.hops) {
            return Err(Error::validation(format!("hops must be 1 or 2, got {}", self.hops)));
        }
        Ok(())
    }
}
