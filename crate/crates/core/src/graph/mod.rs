//! Temporal interaction store.
//!
//! A [`TemporalGraph`] holds a time-sorted list of interactions together with
//! per-node adjacency lists sorted by `(timestamp, interaction index)`. Two
//! adjacency views are kept: the bi-directed view indexes every interaction
//! under both endpoints, the directed view only under its source.

mod csv_io;
mod snapshot;
mod split;

pub use csv_io::{ingest_csv, read_node_features, write_csv, CsvSchema, FeatureColumns};
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use split::{chronological_split, SplitSpec, SplitWarning, DEFAULT_RATIOS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u32;

/// One timestamped interaction `src -> dst`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub src: NodeId,
    pub dst: NodeId,
    pub timestamp: f64,
    pub edge_feat: Vec<f64>,
    pub label: Option<bool>,
}

impl Interaction {
    pub fn new(src: NodeId, dst: NodeId, timestamp: f64) -> Self {
        Interaction {
            src,
            dst,
            timestamp,
            edge_feat: Vec::new(),
            label: None,
        }
    }
}

/// Which adjacency view a query reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Every interaction appears in both endpoints' lists.
    #[default]
    #[serde(alias = "bi")]
    Bidirected,
    /// Interactions appear only in the source's list.
    #[serde(alias = "di")]
    Directed,
}

/// Adjacency entry: the other endpoint, the interaction time and its index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjEntry {
    pub neighbor: NodeId,
    pub timestamp: f64,
    pub edge: u32,
}

/// CSR adjacency with per-node lists sorted ascending by `(timestamp, edge)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<AdjEntry>,
}

impl Adjacency {
    fn build(num_nodes: usize, src: &[NodeId], dst: &[NodeId], ts: &[f64], both: bool) -> Self {
        let mut counts = vec![0usize; num_nodes + 1];
        for (&s, &d) in src.iter().zip(dst) {
            counts[s as usize + 1] += 1;
            if both {
                counts[d as usize + 1] += 1;
            }
        }
        for i in 1..=num_nodes {
            counts[i] += counts[i - 1];
        }
        let offsets = counts.clone();
        let placeholder = AdjEntry {
            neighbor: 0,
            timestamp: 0.0,
            edge: 0,
        };
        let mut entries = vec![placeholder; offsets[num_nodes]];
        let mut cursor = counts;
        // Interactions are already sorted by (timestamp, index), so pushing in
        // index order keeps every list sorted.
        for (e, ((&s, &d), &t)) in src.iter().zip(dst).zip(ts).enumerate() {
            let slot = &mut cursor[s as usize];
            entries[*slot] = AdjEntry {
                neighbor: d,
                timestamp: t,
                edge: e as u32,
            };
            *slot += 1;
            if both {
                let slot = &mut cursor[d as usize];
                entries[*slot] = AdjEntry {
                    neighbor: s,
                    timestamp: t,
                    edge: e as u32,
                };
                *slot += 1;
            }
        }
        Adjacency { offsets, entries }
    }

    pub fn neighbors(&self, v: NodeId) -> &[AdjEntry] {
        let v = v as usize;
        if v + 1 >= self.offsets.len() {
            return &[];
        }
        &self.entries[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn entries(&self) -> &[AdjEntry] {
        &self.entries
    }
}

/// Immutable temporal interaction store.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGraph {
    num_nodes: usize,
    src: Vec<NodeId>,
    dst: Vec<NodeId>,
    timestamps: Vec<f64>,
    edge_dim: usize,
    edge_feats: Vec<f64>,
    labels: Option<Vec<bool>>,
    node_dim: usize,
    node_feats: Vec<f64>,
    bidirected: Adjacency,
    directed: Adjacency,
    resorted: bool,
}

/// Dense `|V| x dim` node feature matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeFeatures {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl TemporalGraph {
    /// Builds a graph from interactions in file order.
    ///
    /// Interactions are stably sorted by timestamp; if that changed the order,
    /// [`TemporalGraph::was_resorted`] reports it. `num_nodes` is at least
    /// `max id + 1` over interactions and node-feature rows.
    pub fn from_interactions(
        interactions: Vec<Interaction>,
        node_features: NodeFeatures,
        num_nodes: Option<usize>,
    ) -> Result<Self> {
        let edge_dim = interactions.first().map_or(0, |i| i.edge_feat.len());
        let has_labels = interactions.first().is_some_and(|i| i.label.is_some());
        for (idx, it) in interactions.iter().enumerate() {
            if !it.timestamp.is_finite() {
                return Err(Error::validation(format!(
                    "interaction {idx} has non-finite timestamp"
                )));
            }
            if it.edge_feat.len() != edge_dim {
                return Err(Error::validation(format!(
                    "interaction {idx} has {} edge features, expected {edge_dim}",
                    it.edge_feat.len()
                )));
            }
            if it.label.is_some() != has_labels {
                return Err(Error::validation(format!(
                    "interaction {idx}: labels must be present on all rows or none"
                )));
            }
            if it.edge_feat.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!(
                    "interaction {idx} has a non-finite edge feature"
                )));
            }
        }
        if node_features.dim == 0 && !node_features.data.is_empty() {
            return Err(Error::validation("node features with zero dimension"));
        }
        if node_features.dim > 0 && node_features.data.len() % node_features.dim != 0 {
            return Err(Error::validation("node feature matrix is ragged"));
        }

        let max_id = interactions
            .iter()
            .map(|i| i.src.max(i.dst) as usize + 1)
            .max()
            .unwrap_or(0);
        let feat_rows = node_features
            .data
            .len()
            .checked_div(node_features.dim)
            .unwrap_or(0);
        let num_nodes = num_nodes.unwrap_or(0).max(max_id).max(feat_rows);
        if u32::try_from(interactions.len()).is_err() {
            return Err(Error::validation("too many interactions"));
        }

        let sorted = interactions
            .windows(2)
            .all(|w| w[0].timestamp <= w[1].timestamp);
        let mut interactions = interactions;
        if !sorted {
            // Vec::sort_by is stable, so ties keep file order.
            interactions.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        }

        let n = interactions.len();
        let mut src = Vec::with_capacity(n);
        let mut dst = Vec::with_capacity(n);
        let mut timestamps = Vec::with_capacity(n);
        let mut edge_feats = Vec::with_capacity(n * edge_dim);
        let mut labels = has_labels.then(|| Vec::with_capacity(n));
        for it in interactions {
            src.push(it.src);
            dst.push(it.dst);
            timestamps.push(it.timestamp);
            edge_feats.extend_from_slice(&it.edge_feat);
            if let (Some(l), Some(v)) = (labels.as_mut(), it.label) {
                l.push(v);
            }
        }

        let mut node_feats = node_features.data;
        node_feats.resize(num_nodes * node_features.dim, 0.0);
        if node_feats.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("non-finite node feature"));
        }

        let bidirected = Adjacency::build(num_nodes, &src, &dst, &timestamps, true);
        let directed = Adjacency::build(num_nodes, &src, &dst, &timestamps, false);
        Ok(TemporalGraph {
            num_nodes,
            src,
            dst,
            timestamps,
            edge_dim,
            edge_feats,
            labels,
            node_dim: node_features.dim,
            node_feats,
            bidirected,
            directed,
            resorted: !sorted,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    pub fn node_dim(&self) -> usize {
        self.node_dim
    }

    /// True if ingestion had to re-sort rows by timestamp.
    pub fn was_resorted(&self) -> bool {
        self.resorted
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    pub fn src(&self, e: usize) -> NodeId {
        self.src[e]
    }

    pub fn dst(&self, e: usize) -> NodeId {
        self.dst[e]
    }

    pub fn timestamp(&self, e: usize) -> f64 {
        self.timestamps[e]
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn sources(&self) -> &[NodeId] {
        &self.src
    }

    pub fn destinations(&self) -> &[NodeId] {
        &self.dst
    }

    pub fn edge_feat(&self, e: usize) -> &[f64] {
        &self.edge_feats[e * self.edge_dim..(e + 1) * self.edge_dim]
    }

    pub fn label(&self, e: usize) -> Option<bool> {
        self.labels.as_ref().map(|l| l[e])
    }

    pub fn node_feat(&self, v: NodeId) -> &[f64] {
        let v = v as usize;
        &self.node_feats[v * self.node_dim..(v + 1) * self.node_dim]
    }

    pub fn interaction(&self, e: usize) -> Interaction {
        Interaction {
            src: self.src[e],
            dst: self.dst[e],
            timestamp: self.timestamps[e],
            edge_feat: self.edge_feat(e).to_vec(),
            label: self.label(e),
        }
    }

    pub fn interactions(&self) -> impl Iterator<Item = Interaction> + '_ {
        (0..self.num_edges()).map(move |e| self.interaction(e))
    }

    pub fn node_features(&self) -> NodeFeatures {
        NodeFeatures {
            dim: self.node_dim,
            data: self.node_feats.clone(),
        }
    }

    pub fn adjacency(&self, direction: Direction) -> &Adjacency {
        match direction {
            Direction::Bidirected => &self.bidirected,
            Direction::Directed => &self.directed,
        }
    }

    pub fn contains_node(&self, v: NodeId) -> bool {
        (v as usize) < self.num_nodes
    }

    pub fn stats(&self) -> GraphStats {
        let n = self.num_edges();
        let avg_time_gap = if n >= 2 {
            (self.timestamps[n - 1] - self.timestamps[0]) / (n - 1) as f64
        } else {
            0.0
        };
        GraphStats {
            num_nodes: self.num_nodes,
            num_edges: n,
            avg_time_gap,
            d_n: self.node_dim,
            d_e: self.edge_dim,
            has_node_feats: self.node_dim > 0,
            has_edge_feats: self.edge_dim > 0,
        }
    }

    /// Returns a copy whose node and edge feature vectors have l2 norm at
    /// most one. Vectors already inside the unit ball are untouched.
    pub fn normalize_features(&self) -> Result<TemporalGraph> {
        if self.edge_feats.iter().any(|x| !x.is_finite())
            || self.node_feats.iter().any(|x| !x.is_finite())
        {
            return Err(Error::validation("non-finite feature value"));
        }
        let mut out = self.clone();
        if out.edge_dim > 0 {
            out.edge_feats
                .chunks_mut(out.edge_dim)
                .for_each(clip_to_unit_ball);
        }
        if out.node_dim > 0 {
            out.node_feats
                .chunks_mut(out.node_dim)
                .for_each(clip_to_unit_ball);
        }
        Ok(out)
    }

    pub(crate) fn raw_parts(&self) -> RawParts<'_> {
        RawParts {
            num_nodes: self.num_nodes,
            src: &self.src,
            dst: &self.dst,
            timestamps: &self.timestamps,
            edge_dim: self.edge_dim,
            edge_feats: &self.edge_feats,
            labels: self.labels.as_deref(),
            node_dim: self.node_dim,
            node_feats: &self.node_feats,
            resorted: self.resorted,
        }
    }
}

pub(crate) struct RawParts<'a> {
    pub num_nodes: usize,
    pub src: &'a [NodeId],
    pub dst: &'a [NodeId],
    pub timestamps: &'a [f64],
    pub edge_dim: usize,
    pub edge_feats: &'a [f64],
    pub labels: Option<&'a [bool]>,
    pub node_dim: usize,
    pub node_feats: &'a [f64],
    pub resorted: bool,
}

fn clip_to_unit_ball(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Summary statistics of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    /// Mean gap between consecutive interactions, `(t_last - t_first) / (|E| - 1)`.
    pub avg_time_gap: f64,
    pub d_n: usize,
    pub d_e: usize,
    pub has_node_feats: bool,
    pub has_edge_feats: bool,
}
