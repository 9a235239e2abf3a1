//! Turns graph queries into encoder inputs according to a model's sampling
//! settings.

use rand::Rng;

use super::config::Method;
use super::features::{build_event_features, build_tree_features, event_feature_into, EventFeatures};
use super::memory::MemoryState;
use super::model::{Model, ModelInput, NodeInput};
use crate::error::{Error, Result};
use crate::graph::{NodeId, TemporalGraph};
use crate::sampling::{recent_neighbors, sample_neighbors, sample_tree};

/// Encoder input for `v` at time `t`. The memory family reads `memory`;
/// the others ignore it.
pub fn node_input<R: Rng + ?Sized>(
    model: &Model,
    g: &TemporalGraph,
    v: NodeId,
    t: f64,
    memory: Option<&MemoryState>,
    rng: &mut R,
) -> Result<NodeInput> {
    let cfg = model.config();
    let enc = model.time_encoder();
    match cfg.method {
        Method::Stone if cfg.hops == 2 => two_hop_events(model, g, v, t, rng).map(NodeInput::Events),
        Method::Stone => {
            let nb = sample_neighbors(g, v, t, cfg.k, cfg.sampling, cfg.direction, rng)?;
            Ok(NodeInput::Events(build_event_features(g, &nb, t, enc)?))
        }
        Method::Rnn => {
            let nb = sample_neighbors(g, v, t, cfg.layers - 1, cfg.sampling, cfg.direction, rng)?;
            Ok(NodeInput::Events(build_event_features(g, &nb, t, enc)?))
        }
        Method::Gnn => {
            let fanouts = vec![cfg.k; cfg.layers - 1];
            let tree = sample_tree(g, v, t, &fanouts, cfg.sampling, cfg.direction, rng)?;
            Ok(NodeInput::Tree(build_tree_features(g, &tree, enc)?))
        }
        Method::Memory => {
            let state = memory.ok_or_else(|| Error::validation("memory model needs a memory state"))?;
            if v as usize >= state.num_nodes() {
                return Err(Error::validation(format!("node {v} outside memory")));
            }
            Ok(NodeInput::Memory(state.input(v)))
        }
    }
}

/// `ceil(K/2)` one-hop events followed by the single most recent event of
/// each one-hop neighbor before its own interaction time, capped at `K`
/// rows. Every row is seen from `v` at time `t`.
fn two_hop_events<R: Rng + ?Sized>(
    model: &Model,
    g: &TemporalGraph,
    v: NodeId,
    t: f64,
    rng: &mut R,
) -> Result<EventFeatures> {
    let cfg = model.config();
    let enc = model.time_encoder();
    let k1 = cfg.k.div_ceil(2);
    let hop1 = sample_neighbors(g, v, t, k1, cfg.sampling, cfg.direction, rng)?;
    let mut rows = build_event_features(g, &hop1, t, enc)?;
    let mut buf = Vec::with_capacity(rows.dim());
    for e in &hop1.entries {
        if rows.len() >= cfg.k {
            break;
        }
        let hop2 = recent_neighbors(g, e.neighbor, e.timestamp, 1, cfg.direction)?;
        for f in &hop2.entries {
            buf.clear();
            event_feature_into(g, enc, v, f.neighbor, f.edge as usize, t, &mut buf)?;
            rows.push(&buf)?;
        }
    }
    rows.truncate(cfg.k);
    Ok(rows)
}

pub fn link_input<R: Rng + ?Sized>(
    model: &Model,
    g: &TemporalGraph,
    src: NodeId,
    dst: NodeId,
    t: f64,
    memory: Option<&MemoryState>,
    rng: &mut R,
) -> Result<ModelInput> {
    let a = node_input(model, g, src, t, memory, rng)?;
    let b = node_input(model, g, dst, t, memory, rng)?;
    Ok(ModelInput::Link(a, b))
}
