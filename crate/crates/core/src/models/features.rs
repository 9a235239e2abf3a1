use serde::{Deserialize, Serialize};

use super::time_encoding::TimeEncoder;
use crate::error::{Error, Result};
use crate::graph::{NodeId, TemporalGraph};
use crate::sampling::{NeighborTree, TemporalNeighborhood};

/// Segment sizes of an event feature `[e | psi(dt) | x_i | x_j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub d_e: usize,
    pub d_t: usize,
    pub d_n: usize,
}

impl FeatureLayout {
    pub fn for_graph(g: &TemporalGraph, d_t: usize) -> Self {
        FeatureLayout {
            d_e: g.edge_dim(),
            d_t,
            d_n: g.node_dim(),
        }
    }

    pub fn d_in(&self) -> usize {
        self.d_e + self.d_t + 2 * self.d_n
    }
}

/// A dense list of event feature rows, newest first unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventFeatures {
    dim: usize,
    data: Vec<f64>,
}

impl EventFeatures {
    pub fn new(dim: usize) -> Self {
        EventFeatures {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut out = EventFeatures::new(dim);
        for r in rows {
            out.push(r)?;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::dimension(format!(
                "event feature has {} entries, expected {}",
                row.len(),
                self.dim
            )));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn truncate(&mut self, n: usize) {
        self.data.truncate(n * self.dim);
    }
}

/// Assembles one event feature for the interaction `edge` seen from `root`
/// towards `other`, observed at `t`.
pub fn event_feature_into(
    g: &TemporalGraph,
    enc: &TimeEncoder,
    root: NodeId,
    other: NodeId,
    edge: usize,
    t: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    out.extend_from_slice(g.edge_feat(edge));
    enc.encode_into(t - g.timestamp(edge), out)?;
    out.extend_from_slice(g.node_feat(root));
    out.extend_from_slice(g.node_feat(other));
    Ok(())
}

/// The feature set of a temporal neighborhood, one row per entry in the
/// neighborhood's order.
pub fn build_event_features(
    g: &TemporalGraph,
    nbr: &TemporalNeighborhood,
    t: f64,
    enc: &TimeEncoder,
) -> Result<EventFeatures> {
    if nbr.query_time != t {
        return Err(Error::validation(format!(
            "neighborhood was queried at {} but features requested at {t}",
            nbr.query_time
        )));
    }
    let layout = FeatureLayout::for_graph(g, enc.dim());
    let mut out = EventFeatures::new(layout.d_in());
    out.data.reserve(nbr.len() * layout.d_in());
    for e in &nbr.entries {
        event_feature_into(g, enc, nbr.root, e.neighbor, e.edge as usize, t, &mut out.data)?;
    }
    Ok(out)
}

/// A sampled tree with an input feature on every non-root vertex: the event
/// feature of the interaction linking it to its parent, seen from the parent.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTree {
    pub dim: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub depth: Vec<usize>,
    /// Row `v` is zero for the root.
    pub feats: Vec<f64>,
}

impl FeatureTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn feat(&self, v: usize) -> &[f64] {
        &self.feats[v * self.dim..(v + 1) * self.dim]
    }

    /// A root with the given children feature rows and no deeper levels.
    pub fn star(dim: usize, leaves: &[Vec<f64>]) -> Self {
        let mut t = FeatureTree {
            dim,
            parent: vec![None],
            children: vec![Vec::new()],
            depth: vec![0],
            feats: vec![0.0; dim],
        };
        for leaf in leaves {
            t.add_child(0, leaf);
        }
        t
    }

    pub fn add_child(&mut self, parent: usize, feat: &[f64]) -> usize {
        assert_eq!(feat.len(), self.dim);
        let id = self.parent.len();
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.children[parent].push(id);
        self.depth.push(self.depth[parent] + 1);
        self.feats.extend_from_slice(feat);
        id
    }
}

pub fn build_tree_features(
    g: &TemporalGraph,
    tree: &NeighborTree,
    enc: &TimeEncoder,
) -> Result<FeatureTree> {
    let dim = FeatureLayout::for_graph(g, enc.dim()).d_in();
    let mut out = FeatureTree {
        dim,
        parent: Vec::with_capacity(tree.nodes.len()),
        children: Vec::with_capacity(tree.nodes.len()),
        depth: Vec::with_capacity(tree.nodes.len()),
        feats: Vec::with_capacity(tree.nodes.len() * dim),
    };
    for v in &tree.nodes {
        out.parent.push(v.parent);
        out.children.push(v.children.clone());
        out.depth.push(v.depth);
        match (v.parent, v.via_edge) {
            (Some(p), Some(e)) => {
                let pv = &tree.nodes[p];
                event_feature_into(g, enc, pv.node, v.node, e as usize, pv.time, &mut out.feats)?;
            }
            _ => out.feats.extend(std::iter::repeat_n(0.0, dim)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Direction, Interaction, NodeFeatures};
    use crate::sampling::recent_neighbors;

    fn figure_graph() -> TemporalGraph {
        let rows = vec![
            Interaction::new(1, 2, 1.0),
            Interaction::new(1, 3, 2.0),
            Interaction::new(2, 4, 3.0),
            Interaction::new(2, 4, 4.0),
            Interaction::new(3, 5, 5.0),
            Interaction::new(4, 5, 6.0),
        ];
        TemporalGraph::from_interactions(rows, NodeFeatures::default(), None).unwrap()
    }

    #[test]
    fn worked_example_rows_in_neighborhood_order() {
        let g = figure_graph();
        let enc = TimeEncoder::new(3);
        let nb = recent_neighbors(&g, 4, 7.0, 10, Direction::Bidirected).unwrap();
        let h = build_event_features(&g, &nb, 7.0, &enc).unwrap();
        assert_eq!(h.len(), 3);
        // featureless graph: each row is just psi(7 - t')
        for (row, tp) in h.rows().zip([6.0, 4.0, 3.0]) {
            assert_eq!(row, enc.encode(7.0 - tp).unwrap().as_slice());
        }
    }

    #[test]
    fn empty_neighborhood_gives_no_rows() {
        let g = figure_graph();
        let nb = recent_neighbors(&g, 1, 0.5, 4, Direction::Bidirected).unwrap();
        let h = build_event_features(&g, &nb, 0.5, &TimeEncoder::new(2)).unwrap();
        assert!(h.is_empty());
    }

    #[test]
    fn segment_layout_with_features() {
        let mut rows = vec![Interaction::new(0, 1, 1.0)];
        rows[0].edge_feat = vec![0.5];
        let nodes = NodeFeatures {
            dim: 2,
            data: vec![1.0, 2.0, 3.0, 4.0],
        };
        let g = TemporalGraph::from_interactions(rows, nodes, None).unwrap();
        let enc = TimeEncoder::new(1);
        let nb = recent_neighbors(&g, 1, 2.0, 1, Direction::Bidirected).unwrap();
        let h = build_event_features(&g, &nb, 2.0, &enc).unwrap();
        assert_eq!(h.dim(), FeatureLayout::for_graph(&g, 1).d_in());
        assert_eq!(h.row(0), &[0.5, 1f64.cos(), 3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn mismatched_query_time_rejected() {
        let g = figure_graph();
        let nb = recent_neighbors(&g, 4, 7.0, 10, Direction::Bidirected).unwrap();
        assert!(build_event_features(&g, &nb, 8.0, &TimeEncoder::new(2)).is_err());
    }
}
