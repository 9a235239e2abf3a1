use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{NodeId, TemporalGraph};
use crate::error::{Error, Result};

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.70, 0.15, 0.15);

/// Index-based chronological split: `[0, train_end)`, `[train_end, val_end)`,
/// `[val_end, |E|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_end_idx: usize,
    pub val_end_idx: usize,
    pub num_edges: usize,
    /// Nodes that never occur in the training interactions.
    pub inductive_nodes: BTreeSet<NodeId>,
    pub ratios: (f64, f64, f64),
    pub warnings: Vec<SplitWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitWarning {
    /// Tied timestamps pushed a boundary past its nominal index.
    BoundaryMoved { boundary: String, from: usize, to: usize },
    EmptyValidation,
    EmptyTest,
}

impl SplitSpec {
    pub fn train(&self) -> std::ops::Range<usize> {
        0..self.train_end_idx
    }

    pub fn val(&self) -> std::ops::Range<usize> {
        self.train_end_idx..self.val_end_idx
    }

    pub fn test(&self) -> std::ops::Range<usize> {
        self.val_end_idx..self.num_edges
    }

    pub fn is_inductive(&self, v: NodeId) -> bool {
        self.inductive_nodes.contains(&v)
    }
}

fn nominal(fraction: f64, n: usize) -> usize {
    // guard against 0.85 * 100 = 84.999..
    ((fraction * n as f64) + 1e-9).floor() as usize
}

fn push_past_ties(ts: &[f64], mut idx: usize) -> usize {
    while idx > 0 && idx < ts.len() && ts[idx] == ts[idx - 1] {
        idx += 1;
    }
    idx
}

/// Splits at `floor(r_train |E|)` and `floor((r_train + r_val) |E|)`, moving
/// each boundary forward until it no longer separates equal timestamps.
pub fn chronological_split(g: &TemporalGraph, ratios: (f64, f64, f64)) -> Result<SplitSpec> {
    let (a, b, c) = ratios;
    if !(a > 0.0 && b > 0.0 && c > 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "split ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let n = g.num_edges();
    if n < 3 {
        return Err(Error::validation(format!(
            "cannot split {n} interactions into three parts"
        )));
    }
    let ts = g.timestamps();
    let mut warnings = Vec::new();

    let nominal_train = nominal(a, n).max(1);
    let train_end = push_past_ties(ts, nominal_train);
    if train_end != nominal_train {
        warnings.push(SplitWarning::BoundaryMoved {
            boundary: "train".into(),
            from: nominal_train,
            to: train_end,
        });
    }
    let nominal_val = nominal(a + b, n).max(train_end);
    let val_end = push_past_ties(ts, nominal_val);
    if val_end != nominal_val {
        warnings.push(SplitWarning::BoundaryMoved {
            boundary: "validation".into(),
            from: nominal_val,
            to: val_end,
        });
    }
    if val_end == train_end {
        warnings.push(SplitWarning::EmptyValidation);
    }
    if val_end == n {
        warnings.push(SplitWarning::EmptyTest);
    }
    for w in &warnings {
        log::warn!("chronological split: {w:?}");
    }

    let mut seen = vec![false; g.num_nodes()];
    for e in 0..train_end {
        seen[g.src(e) as usize] = true;
        seen[g.dst(e) as usize] = true;
    }
    let inductive_nodes = seen
        .iter()
        .enumerate()
        .filter(|(_, &s)| !s)
        .map(|(v, _)| v as NodeId)
        .collect();

    Ok(SplitSpec {
        train_end_idx: train_end,
        val_end_idx: val_end,
        num_edges: n,
        inductive_nodes,
        ratios,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Interaction, NodeFeatures};

    fn graph(rows: Vec<Interaction>) -> TemporalGraph {
        TemporalGraph::from_interactions(rows, NodeFeatures::default(), None).unwrap()
    }

    #[test]
    fn hundred_distinct_timestamps() {
        let g = graph((0..100).map(|i| Interaction::new(0, 1, i as f64)).collect());
        let s = chronological_split(&g, DEFAULT_RATIOS).unwrap();
        assert_eq!((s.train_end_idx, s.val_end_idx), (70, 85));
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn all_tied_timestamps_land_in_train() {
        let g = graph((0..10).map(|_| Interaction::new(0, 1, 5.0)).collect());
        let s = chronological_split(&g, DEFAULT_RATIOS).unwrap();
        assert_eq!(s.train_end_idx, 10);
        assert_eq!(s.val_end_idx, 10);
        assert!(!s.warnings.is_empty());
        assert!(s.warnings.contains(&SplitWarning::EmptyTest));
    }

    #[test]
    fn late_node_is_inductive() {
        let rows = (0..100)
            .map(|i| {
                if i == 90 {
                    Interaction::new(9, 1, i as f64)
                } else {
                    Interaction::new(i % 3, 3 + i % 2, i as f64)
                }
            })
            .collect();
        let s = chronological_split(&graph(rows), DEFAULT_RATIOS).unwrap();
        assert!(s.is_inductive(9));
        assert!(!s.is_inductive(0));
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let g = graph(vec![Interaction::new(0, 1, 1.0), Interaction::new(0, 1, 2.0)]);
        assert!(chronological_split(&g, DEFAULT_RATIOS).is_err());
        let g = graph((0..10).map(|i| Interaction::new(0, 1, i as f64)).collect());
        assert!(chronological_split(&g, (0.5, 0.5, 0.5)).is_err());
        assert!(chronological_split(&g, (1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn ties_at_boundary_move_forward() {
        // timestamps 0..9 with a tie straddling index 7
        let ts = [0., 1., 2., 3., 4., 5., 6., 6., 6., 9.];
        let g = graph(ts.iter().map(|&t| Interaction::new(0, 1, t)).collect());
        let s = chronological_split(&g, DEFAULT_RATIOS).unwrap();
        assert_eq!(s.train_end_idx, 9);
        let max_train = g.timestamps()[..s.train_end_idx].iter().cloned().fold(f64::MIN, f64::max);
        let min_rest = g.timestamps()[s.train_end_idx..].iter().cloned().fold(f64::MAX, f64::min);
        assert!(max_train < min_rest);
    }
}
