use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Uniform negative destinations, optionally restricted to a node pool.
#[derive(Debug, Clone, PartialEq)]
pub enum NegativeSampler {
    /// Every node id in `0..n`.
    All(usize),
    /// A sorted, duplicate-free pool (e.g. the inductive nodes).
    Pool(Vec<NodeId>),
}

impl NegativeSampler {
    pub fn pool(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        let mut v: Vec<NodeId> = nodes.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        NegativeSampler::Pool(v)
    }

    /// A node chosen uniformly among eligible nodes other than `exclude`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, exclude: NodeId) -> Result<NodeId> {
        match self {
            NegativeSampler::All(n) => {
                let n = *n;
                let skip = (exclude as usize) < n;
                let eligible = n - usize::from(skip);
                if eligible == 0 {
                    return Err(Error::validation("no node available as a negative"));
                }
                let r = rng.random_range(0..eligible);
                Ok(if skip && r >= exclude as usize { r + 1 } else { r } as NodeId)
            }
            NegativeSampler::Pool(pool) => {
                let pos = pool.binary_search(&exclude).ok();
                let eligible = pool.len() - usize::from(pos.is_some());
                if eligible == 0 {
                    return Err(Error::validation("no node available as a negative"));
                }
                let r = rng.random_range(0..eligible);
                Ok(match pos {
                    Some(p) if r >= p => pool[r + 1],
                    _ => pool[r],
                })
            }
        }
    }
}

/// One uniform negative for `src`'s true destination `dst` over all nodes.
pub fn sample_negative<R: Rng + ?Sized>(rng: &mut R, num_nodes: usize, dst: NodeId) -> Result<NodeId> {
    NegativeSampler::All(num_nodes).sample(rng, dst)
}
