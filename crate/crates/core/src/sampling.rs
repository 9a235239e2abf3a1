//! Temporal neighbor sampling.
//!
//! All queries are strict: an interaction at exactly the query time is never
//! returned. Results are ordered by descending `(timestamp, interaction index)`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AdjEntry, Direction, NodeId, TemporalGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    #[default]
    Recent,
    Uniform,
}

/// One sampled temporal neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEntry {
    pub neighbor: NodeId,
    pub timestamp: f64,
    pub edge: u32,
}

impl From<&AdjEntry> for NeighborEntry {
    fn from(e: &AdjEntry) -> Self {
        NeighborEntry {
            neighbor: e.neighbor,
            timestamp: e.timestamp,
            edge: e.edge,
        }
    }
}

/// Up to `K` interactions of `root` strictly before `query_time`, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalNeighborhood {
    pub root: NodeId,
    pub query_time: f64,
    pub entries: Vec<NeighborEntry>,
    pub mode: SamplingMode,
    pub direction: Direction,
}

impl TemporalNeighborhood {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(neighbor, timestamp)` pairs, newest first.
    pub fn pairs(&self) -> Vec<(NodeId, f64)> {
        self.entries.iter().map(|e| (e.neighbor, e.timestamp)).collect()
    }
}

/// Hop-1 neighborhood of the root plus, for every hop-1 entry, that
/// neighbor's own neighborhood queried at the hop-1 interaction time.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredNeighborhood {
    pub root: NodeId,
    pub hop1: TemporalNeighborhood,
    pub hop2: Vec<TemporalNeighborhood>,
}

fn history(g: &TemporalGraph, v: NodeId, t: f64, direction: Direction) -> Result<&[AdjEntry]> {
    if !g.contains_node(v) {
        return Err(Error::validation(format!(
            "node {v} not in graph with {} nodes",
            g.num_nodes()
        )));
    }
    let list = g.adjacency(direction).neighbors(v);
    let end = list.partition_point(|e| e.timestamp < t);
    Ok(&list[..end])
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::validation("neighbor count K must be at least 1"));
    }
    Ok(())
}

/// The `k` most recent interactions of `v` before `t`.
pub fn recent_neighbors(
    g: &TemporalGraph,
    v: NodeId,
    t: f64,
    k: usize,
    direction: Direction,
) -> Result<TemporalNeighborhood> {
    check_k(k)?;
    let past = history(g, v, t, direction)?;
    let entries = past.iter().rev().take(k).map(NeighborEntry::from).collect();
    Ok(TemporalNeighborhood {
        root: v,
        query_time: t,
        entries,
        mode: SamplingMode::Recent,
        direction,
    })
}

/// `k` interactions of `v` before `t` drawn uniformly without replacement,
/// returned newest first.
pub fn uniform_neighbors<R: Rng + ?Sized>(
    g: &TemporalGraph,
    v: NodeId,
    t: f64,
    k: usize,
    direction: Direction,
    rng: &mut R,
) -> Result<TemporalNeighborhood> {
    check_k(k)?;
    let past = history(g, v, t, direction)?;
    let entries = if past.len() <= k {
        past.iter().rev().map(NeighborEntry::from).collect()
    } else {
        let mut picked = index::sample(rng, past.len(), k).into_vec();
        picked.sort_unstable_by(|a, b| b.cmp(a));
        picked.into_iter().map(|i| NeighborEntry::from(&past[i])).collect()
    };
    Ok(TemporalNeighborhood {
        root: v,
        query_time: t,
        entries,
        mode: SamplingMode::Uniform,
        direction,
    })
}

/// Dispatches on `mode`; `rng` is only touched in uniform mode.
pub fn sample_neighbors<R: Rng + ?Sized>(
    g: &TemporalGraph,
    v: NodeId,
    t: f64,
    k: usize,
    mode: SamplingMode,
    direction: Direction,
    rng: &mut R,
) -> Result<TemporalNeighborhood> {
    match mode {
        SamplingMode::Recent => recent_neighbors(g, v, t, k, direction),
        SamplingMode::Uniform => uniform_neighbors(g, v, t, k, direction, rng),
    }
}

/// Two-hop recent neighborhood. Hop-2 lists are queried at the hop-1
/// interaction time, so every root-to-leaf path goes strictly back in time.
pub fn recent_two_hop(
    g: &TemporalGraph,
    v: NodeId,
    t: f64,
    k1: usize,
    k2: usize,
    direction: Direction,
) -> Result<LayeredNeighborhood> {
    check_k(k2)?;
    let hop1 = recent_neighbors(g, v, t, k1, direction)?;
    let hop2 = hop1
        .entries
        .iter()
        .map(|e| recent_neighbors(g, e.neighbor, e.timestamp, k2, direction))
        .collect::<Result<Vec<_>>>()?;
    Ok(LayeredNeighborhood { root: v, hop1, hop2 })
}

/// A sampled computation tree of arbitrary depth. Node 0 is the root; every
/// other node records the interaction that links it to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTree {
    pub nodes: Vec<TreeVertex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeVertex {
    pub node: NodeId,
    /// Time at which this vertex's own neighbors are queried.
    pub time: f64,
    /// Interaction to the parent (`None` for the root).
    pub via_edge: Option<u32>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
}

/// Samples a tree with `fanouts[d]` children per vertex at depth `d`.
pub fn sample_tree<R: Rng + ?Sized>(
    g: &TemporalGraph,
    v: NodeId,
    t: f64,
    fanouts: &[usize],
    mode: SamplingMode,
    direction: Direction,
    rng: &mut R,
) -> Result<NeighborTree> {
    let mut nodes = vec![TreeVertex {
        node: v,
        time: t,
        via_edge: None,
        parent: None,
        children: Vec::new(),
        depth: 0,
    }];
    let mut frontier = vec![0usize];
    for &k in fanouts {
        let mut next = Vec::new();
        for &p in &frontier {
            let (pv, pt, depth) = (nodes[p].node, nodes[p].time, nodes[p].depth);
            let nb = sample_neighbors(g, pv, pt, k, mode, direction, rng)?;
            for e in nb.entries {
                let id = nodes.len();
                nodes.push(TreeVertex {
                    node: e.neighbor,
                    time: e.timestamp,
                    via_edge: Some(e.edge),
                    parent: Some(p),
                    children: Vec::new(),
                    depth: depth + 1,
                });
                nodes[p].children.push(id);
                next.push(id);
            }
        }
        frontier = next;
    }
    Ok(NeighborTree { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Interaction, NodeFeatures};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The six-interaction example graph: v1..v5 mapped to ids 1..5.
    pub(crate) fn figure_graph() -> TemporalGraph {
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
    fn worked_example_v4() {
        let g = figure_graph();
        let nb = recent_neighbors(&g, 4, 7.0, 100, Direction::Bidirected).unwrap();
        assert_eq!(nb.pairs(), vec![(5, 6.0), (2, 4.0), (2, 3.0)]);
    }

    #[test]
    fn directed_versus_bidirected_pair() {
        let rows = vec![Interaction::new(0, 1, 1.0), Interaction::new(0, 1, 2.0)];
        let g = TemporalGraph::from_interactions(rows, NodeFeatures::default(), None).unwrap();
        let di = recent_neighbors(&g, 1, 3.0, 10, Direction::Directed).unwrap();
        assert!(di.is_empty());
        let bi = recent_neighbors(&g, 1, 3.0, 10, Direction::Bidirected).unwrap();
        assert_eq!(bi.pairs(), vec![(0, 2.0), (0, 1.0)]);
        let src = recent_neighbors(&g, 0, 3.0, 10, Direction::Directed).unwrap();
        assert_eq!(src.pairs(), vec![(1, 2.0), (1, 1.0)]);
    }

    #[test]
    fn strict_before_and_singleton() {
        let g = figure_graph();
        let nb = recent_neighbors(&g, 4, 6.0, 10, Direction::Bidirected).unwrap();
        assert_eq!(nb.pairs(), vec![(2, 4.0), (2, 3.0)]);
        let nb = recent_neighbors(&g, 5, 5.5, 1, Direction::Bidirected).unwrap();
        assert_eq!(nb.pairs(), vec![(3, 5.0)]);
        let nb = recent_neighbors(&g, 1, 1.0, 3, Direction::Bidirected).unwrap();
        assert!(nb.is_empty());
    }

    #[test]
    fn errors() {
        let g = figure_graph();
        assert!(recent_neighbors(&g, 99, 1.0, 3, Direction::Bidirected).is_err());
        assert!(recent_neighbors(&g, 1, 1.0, 0, Direction::Bidirected).is_err());
    }

    #[test]
    fn uniform_with_short_history_matches_recent() {
        let g = figure_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = uniform_neighbors(&g, 4, 7.0, 5, Direction::Bidirected, &mut rng).unwrap();
        let r = recent_neighbors(&g, 4, 7.0, 5, Direction::Bidirected).unwrap();
        assert_eq!(u.entries, r.entries);
    }

    #[test]
    fn two_hop_on_example() {
        let g = figure_graph();
        let l = recent_two_hop(&g, 4, 7.0, 2, 2, Direction::Bidirected).unwrap();
        assert_eq!(l.hop1.pairs(), vec![(5, 6.0), (2, 4.0)]);
        // v5 before t6: only (v3, t5); v2 before t4: (v4, t3), (v1, t1)
        assert_eq!(l.hop2[0].pairs(), vec![(3, 5.0)]);
        assert_eq!(l.hop2[1].pairs(), vec![(4, 3.0), (1, 1.0)]);
    }

    #[test]
    fn two_hop_earliest_branch_is_empty() {
        let g = figure_graph();
        let l = recent_two_hop(&g, 2, 1.5, 1, 1, Direction::Bidirected).unwrap();
        assert_eq!(l.hop1.pairs(), vec![(1, 1.0)]);
        assert!(l.hop2[0].is_empty());
        let l = recent_two_hop(&g, 1, 0.5, 3, 3, Direction::Bidirected).unwrap();
        assert!(l.hop1.is_empty() && l.hop2.is_empty());
    }

    #[test]
    fn tree_paths_go_back_in_time() {
        let g = figure_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = sample_tree(
            &g,
            5,
            10.0,
            &[3, 3, 3],
            SamplingMode::Recent,
            Direction::Bidirected,
            &mut rng,
        )
        .unwrap();
        for v in &tree.nodes[1..] {
            let p = &tree.nodes[v.parent.unwrap()];
            assert!(v.time < p.time);
        }
    }
}
