//! Binary snapshot format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      b"STGL1"
//! version    u32            (currently 1)
//! num_nodes  u64
//! num_edges  u64
//! edge_dim   u32
//! node_dim   u32
//! flags      u8             bit 0: labels present, bit 1: rows were re-sorted
//! src        u32 * E
//! dst        u32 * E
//! timestamp  f64 * E
//! edge_feat  f64 * E * edge_dim
//! label      u8  * E        only when bit 0 is set
//! node_feat  f64 * V * node_dim
//! then for the bi-directed and the directed adjacency, in that order:
//!   offsets  u64 * (V + 1)
//!   entries  (neighbor u32, timestamp f64, edge u32) * offsets[V]
//! ```
//!
//! The adjacency arrays are redundant with the interaction list; readers
//! rebuild them and reject files where the two disagree.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{Adjacency, Interaction, NodeFeatures, TemporalGraph};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"STGL1";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_snapshot(g: &TemporalGraph, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(g, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<TemporalGraph> {
    let mut r = BufReader::new(File::open(path)?);
    read_from(&mut r)
}

pub(crate) fn write_to<W: Write>(g: &TemporalGraph, w: &mut W) -> Result<()> {
    let p = g.raw_parts();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_u32::<LE>(SNAPSHOT_VERSION)?;
    w.write_u64::<LE>(p.num_nodes as u64)?;
    w.write_u64::<LE>(p.src.len() as u64)?;
    w.write_u32::<LE>(p.edge_dim as u32)?;
    w.write_u32::<LE>(p.node_dim as u32)?;
    let flags = u8::from(p.labels.is_some()) | (u8::from(p.resorted) << 1);
    w.write_u8(flags)?;
    for &s in p.src {
        w.write_u32::<LE>(s)?;
    }
    for &d in p.dst {
        w.write_u32::<LE>(d)?;
    }
    for &t in p.timestamps {
        w.write_f64::<LE>(t)?;
    }
    for &x in p.edge_feats {
        w.write_f64::<LE>(x)?;
    }
    if let Some(labels) = p.labels {
        for &l in labels {
            w.write_u8(u8::from(l))?;
        }
    }
    for &x in p.node_feats {
        w.write_f64::<LE>(x)?;
    }
    for adj in [&g.bidirected, &g.directed] {
        write_adjacency(adj, w)?;
    }
    Ok(())
}

fn write_adjacency<W: Write>(adj: &Adjacency, w: &mut W) -> Result<()> {
    for &o in adj.offsets() {
        w.write_u64::<LE>(o as u64)?;
    }
    for e in adj.entries() {
        w.write_u32::<LE>(e.neighbor)?;
        w.write_f64::<LE>(e.timestamp)?;
        w.write_u32::<LE>(e.edge)?;
    }
    Ok(())
}

fn read_adjacency<R: Read>(r: &mut R, num_nodes: usize) -> Result<Adjacency> {
    let mut offsets = Vec::with_capacity(num_nodes + 1);
    for _ in 0..=num_nodes {
        offsets.push(r.read_u64::<LE>()? as usize);
    }
    let total = *offsets.last().unwrap_or(&0);
    let mut entries = Vec::with_capacity(total);
    for _ in 0..total {
        entries.push(super::AdjEntry {
            neighbor: r.read_u32::<LE>()?,
            timestamp: r.read_f64::<LE>()?,
            edge: r.read_u32::<LE>()?,
        });
    }
    Ok(Adjacency { offsets, entries })
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; n];
    r.read_f64_into::<LE>(&mut v)?;
    Ok(v)
}

pub(crate) fn read_from<R: Read>(r: &mut R) -> Result<TemporalGraph> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = r.read_u32::<LE>()?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let num_nodes = r.read_u64::<LE>()? as usize;
    let num_edges = r.read_u64::<LE>()? as usize;
    let edge_dim = r.read_u32::<LE>()? as usize;
    let node_dim = r.read_u32::<LE>()? as usize;
    let flags = r.read_u8()?;

    let mut src = vec![0u32; num_edges];
    r.read_u32_into::<LE>(&mut src)?;
    let mut dst = vec![0u32; num_edges];
    r.read_u32_into::<LE>(&mut dst)?;
    let ts = read_f64s(r, num_edges)?;
    let edge_feats = read_f64s(r, num_edges * edge_dim)?;
    let labels = if flags & 1 == 1 {
        let mut raw = vec![0u8; num_edges];
        r.read_exact(&mut raw)?;
        Some(raw.into_iter().map(|b| b == 1).collect::<Vec<_>>())
    } else {
        None
    };
    let node_feats = read_f64s(r, num_nodes * node_dim)?;
    let bidirected = read_adjacency(r, num_nodes)?;
    let directed = read_adjacency(r, num_nodes)?;

    if src.iter().chain(&dst).any(|&v| v as usize >= num_nodes) {
        return Err(Error::Snapshot("node id out of range".into()));
    }
    if ts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Snapshot("interactions not sorted".into()));
    }
    let rows = (0..num_edges)
        .map(|e| Interaction {
            src: src[e],
            dst: dst[e],
            timestamp: ts[e],
            edge_feat: edge_feats[e * edge_dim..(e + 1) * edge_dim].to_vec(),
            label: labels.as_ref().map(|l| l[e]),
        })
        .collect();
    let mut g = TemporalGraph::from_interactions(
        rows,
        NodeFeatures {
            dim: node_dim,
            data: node_feats,
        },
        Some(num_nodes),
    )?;
    if g.num_nodes != num_nodes || g.edge_dim != edge_dim {
        return Err(Error::Snapshot("header disagrees with payload".into()));
    }
    if g.bidirected != bidirected || g.directed != directed {
        return Err(Error::Snapshot("stored adjacency is inconsistent".into()));
    }
    g.resorted = flags & 2 == 2;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_in_memory() {
        let mut rows = vec![
            Interaction::new(0, 1, 1.0),
            Interaction::new(2, 1, 1.5),
            Interaction::new(0, 2, 4.25),
        ];
        for (i, r) in rows.iter_mut().enumerate() {
            r.edge_feat = vec![i as f64, -0.5];
            r.label = Some(i % 2 == 0);
        }
        let nodes = NodeFeatures {
            dim: 1,
            data: vec![0.1, 0.2, 0.3],
        };
        let g = TemporalGraph::from_interactions(rows, nodes, Some(5)).unwrap();
        let mut buf = Vec::new();
        write_to(&g, &mut buf).unwrap();
        assert_eq!(&buf[..5], b"STGL1");
        let back = read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn corrupted_magic_rejected() {
        let g = TemporalGraph::from_interactions(vec![], NodeFeatures::default(), None).unwrap();
        let mut buf = Vec::new();
        write_to(&g, &mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(read_from(&mut buf.as_slice()), Err(Error::Snapshot(_))));
    }

    #[test]
    fn tampered_adjacency_rejected() {
        let rows = vec![Interaction::new(0, 1, 1.0), Interaction::new(1, 2, 2.0)];
        let g = TemporalGraph::from_interactions(rows, NodeFeatures::default(), None).unwrap();
        let mut buf = Vec::new();
        write_to(&g, &mut buf).unwrap();
        // last byte belongs to the final directed adjacency entry's edge index
        let n = buf.len();
        buf[n - 4] ^= 1;
        assert!(read_from(&mut buf.as_slice()).is_err());
    }
}
