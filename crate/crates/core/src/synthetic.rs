//! Seeded synthetic interaction streams.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Interaction, NodeFeatures, NodeId, TemporalGraph};
use crate::rng::{stream_rng, Stream};

/// A stream where recently active nodes are much more likely to interact
/// again. At every step one member of a small active set may be swapped for
/// a random node; both endpoints are drawn from the active set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecencyStream {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub active: usize,
    /// Chance per interaction that one active node is replaced.
    pub swap_prob: f64,
    /// Mean gap between consecutive timestamps.
    pub mean_gap: f64,
    pub seed: u64,
}

impl Default for RecencyStream {
    fn default() -> Self {
        RecencyStream {
            num_nodes: 200,
            num_edges: 2000,
            active: 8,
            swap_prob: 0.1,
            mean_gap: 1.0,
            seed: 0,
        }
    }
}

impl RecencyStream {
    pub fn generate(&self) -> Result<TemporalGraph> {
        if self.active < 2 || self.active > self.num_nodes {
            return Err(Error::validation("active set must hold between 2 and num_nodes nodes"));
        }
        if !(0.0..=1.0).contains(&self.swap_prob) || !(self.mean_gap > 0.0) {
            return Err(Error::validation("swap_prob must be in [0, 1] and mean_gap positive"));
        }
        let mut rng = stream_rng(self.seed, Stream::Data);
        let gaps = Exp::new(1.0 / self.mean_gap).map_err(|e| Error::validation(e.to_string()))?;
        let mut active: Vec<NodeId> = rand::seq::index::sample(&mut rng, self.num_nodes, self.active)
            .into_iter()
            .map(|v| v as NodeId)
            .collect();
        let mut t = 0.0;
        let mut rows = Vec::with_capacity(self.num_edges);
        for _ in 0..self.num_edges {
            if rng.random_bool(self.swap_prob) {
                let slot = rng.random_range(0..active.len());
                let v = rng.random_range(0..self.num_nodes) as NodeId;
                if !active.contains(&v) {
                    active[slot] = v;
                }
            }
            let a = rng.random_range(0..active.len());
            let mut b = rng.random_range(0..active.len() - 1);
            if b >= a {
                b += 1;
            }
            t += gaps.sample(&mut rng);
            rows.push(Interaction::new(active[a], active[b], t));
        }
        TemporalGraph::from_interactions(rows, NodeFeatures::default(), Some(self.num_nodes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sorted() {
        let s = RecencyStream::default();
        let a = s.generate().unwrap();
        let b = s.generate().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_edges(), 2000);
        assert!(a.timestamps().windows(2).all(|w| w[0] <= w[1]));
        assert!((0..a.num_edges()).all(|e| a.src(e) != a.dst(e)));
    }
}
