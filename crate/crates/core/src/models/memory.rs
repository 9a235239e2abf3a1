//! Memory-based encoder. Each interaction rewrites both endpoints' memory:
//! `s_i = act(kappa (W1 s_i^+ + W2 s_j^+ + W3 e_ij))` with `kappa = 1/sqrt(3)`,
//! where `s^+` are detached reads and `s(0) = W0 x` with `W0` frozen.

use super::activation::Activation;
use super::linalg::{matvec_new, outer_add};
use crate::error::{Error, Result};
use crate::graph::NodeId;

pub fn memory_kappa() -> f64 {
    1.0 / 3f64.sqrt()
}

/// `w1`, `w2` are `m x m`; `w3` is `m x d_msg`.
#[derive(Debug, Clone, Copy)]
pub struct MemoryView<'a> {
    pub w1: &'a [f64],
    pub w2: &'a [f64],
    pub w3: &'a [f64],
    pub m: usize,
    pub d_msg: usize,
    pub act: Activation,
}

/// Inputs of the last write to a node's memory, kept so the write can be
/// recomputed with gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryUpdate {
    pub self_prev: Vec<f64>,
    pub other_prev: Vec<f64>,
    pub msg: Vec<f64>,
}

/// What an encoder needs to produce `s_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryInput {
    /// The stored value, used as a constant when `last` is absent.
    pub current: Vec<f64>,
    pub last: Option<MemoryUpdate>,
}

#[derive(Debug, Clone)]
pub struct MemoryCache {
    pre: Vec<f64>,
}

impl MemoryCache {
    pub fn min_abs_preactivation(&self) -> f64 {
        self.pre.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }
}

pub fn update(p: &MemoryView<'_>, u: &MemoryUpdate) -> Result<(Vec<f64>, Vec<f64>)> {
    if u.self_prev.len() != p.m || u.other_prev.len() != p.m || u.msg.len() != p.d_msg {
        return Err(Error::dimension("memory update inputs have the wrong size"));
    }
    let a = matvec_new(p.w1, p.m, p.m, &u.self_prev);
    let b = matvec_new(p.w2, p.m, p.m, &u.other_prev);
    let c = matvec_new(p.w3, p.m, p.d_msg, &u.msg);
    let kappa = memory_kappa();
    let pre: Vec<f64> = (0..p.m).map(|i| kappa * (a[i] + b[i] + c[i])).collect();
    let s = pre.iter().map(|x| p.act.apply(*x)).collect();
    Ok((s, pre))
}

pub fn forward(p: &MemoryView<'_>, input: &MemoryInput) -> Result<(Vec<f64>, Option<MemoryCache>)> {
    match &input.last {
        None => {
            if input.current.len() != p.m {
                return Err(Error::dimension("stored memory has the wrong size"));
            }
            Ok((input.current.clone(), None))
        }
        Some(u) => {
            let (s, pre) = update(p, u)?;
            Ok((s, Some(MemoryCache { pre })))
        }
    }
}

pub fn backward(
    p: &MemoryView<'_>,
    input: &MemoryInput,
    cache: Option<&MemoryCache>,
    dout: &[f64],
    g_w1: &mut [f64],
    g_w2: &mut [f64],
    g_w3: &mut [f64],
) {
    let (Some(u), Some(cache)) = (&input.last, cache) else {
        return;
    };
    let kappa = memory_kappa();
    let g: Vec<f64> = dout
        .iter()
        .zip(&cache.pre)
        .map(|(d, a)| kappa * d * p.act.derivative(*a))
        .collect();
    outer_add(g_w1, &g, &u.self_prev);
    outer_add(g_w2, &g, &u.other_prev);
    outer_add(g_w3, &g, &u.msg);
}

/// Per-node memory blocks for a stream processed in timestamp order.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryState {
    m: usize,
    s: Vec<f64>,
    last_time: Vec<Option<f64>>,
    last_update: Vec<Option<MemoryUpdate>>,
}

impl MemoryState {
    /// `init` is `|V| x m`, normally `W0 x_v` per node.
    pub fn new(m: usize, init: Vec<f64>) -> Self {
        let n = if m == 0 { 0 } else { init.len() / m };
        MemoryState {
            m,
            s: init,
            last_time: vec![None; n],
            last_update: vec![None; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn num_nodes(&self) -> usize {
        self.last_time.len()
    }

    pub fn memory(&self, v: NodeId) -> &[f64] {
        let v = v as usize;
        &self.s[v * self.m..(v + 1) * self.m]
    }

    pub fn last_time(&self, v: NodeId) -> Option<f64> {
        self.last_time[v as usize]
    }

    pub fn input(&self, v: NodeId) -> MemoryInput {
        MemoryInput {
            current: self.memory(v).to_vec(),
            last: self.last_update[v as usize].clone(),
        }
    }

    /// Writes both endpoints from their pre-interaction values. `msg_i` and
    /// `msg_j` are the messages seen by `i` and `j` respectively.
    pub fn step(
        &mut self,
        p: &MemoryView<'_>,
        i: NodeId,
        j: NodeId,
        t: f64,
        msg_i: Vec<f64>,
        msg_j: Vec<f64>,
    ) -> Result<()> {
        for v in [i, j] {
            if v as usize >= self.num_nodes() {
                return Err(Error::validation(format!("node {v} outside memory")));
            }
            if let Some(last) = self.last_time[v as usize] {
                if t < last {
                    return Err(Error::validation(format!(
                        "interaction at {t} precedes node {v}'s last update at {last}"
                    )));
                }
            }
        }
        let si = self.memory(i).to_vec();
        let sj = self.memory(j).to_vec();
        let ui = MemoryUpdate {
            self_prev: si.clone(),
            other_prev: sj.clone(),
            msg: msg_i,
        };
        let uj = MemoryUpdate {
            self_prev: sj,
            other_prev: si,
            msg: msg_j,
        };
        let (new_i, _) = update(p, &ui)?;
        let (new_j, _) = update(p, &uj)?;
        let m = self.m;
        self.s[i as usize * m..(i as usize + 1) * m].copy_from_slice(&new_i);
        self.s[j as usize * m..(j as usize + 1) * m].copy_from_slice(&new_j);
        self.last_time[i as usize] = Some(t);
        self.last_time[j as usize] = Some(t);
        self.last_update[i as usize] = Some(ui);
        self.last_update[j as usize] = Some(uj);
        Ok(())
    }
}
