use std::fs::File;
use std::io::Write;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord};

use super::{Interaction, NodeFeatures, NodeId, TemporalGraph};
use crate::error::{Error, Result};

/// How feature columns are picked out of the header.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureColumns {
    /// Every column named `<prefix><digits>`, in header order.
    Prefix(String),
    /// Exactly these columns, in this order.
    Names(Vec<String>),
    None,
}

/// Column mapping for interaction files.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub src: String,
    pub dst: String,
    pub timestamp: String,
    /// Used only when the header contains it.
    pub label: Option<String>,
    pub features: FeatureColumns,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            src: "src".into(),
            dst: "dst".into(),
            timestamp: "timestamp".into(),
            label: Some("label".into()),
            features: FeatureColumns::Prefix("f".into()),
        }
    }
}

fn column(header: &StringRecord, name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::validation(format!("missing column `{name}`")))
}

fn feature_columns(header: &StringRecord, spec: &FeatureColumns) -> Result<Vec<usize>> {
    match spec {
        FeatureColumns::None => Ok(Vec::new()),
        FeatureColumns::Names(names) => names.iter().map(|n| column(header, n)).collect(),
        FeatureColumns::Prefix(prefix) => Ok(header
            .iter()
            .enumerate()
            .filter(|(_, h)| {
                h.strip_prefix(prefix.as_str())
                    .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
            })
            .map(|(i, _)| i)
            .collect()),
    }
}

fn line_of(rec: &StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn parse_node(rec: &StringRecord, col: usize) -> Result<NodeId> {
    let line = line_of(rec);
    let raw = rec.get(col).unwrap_or("");
    let id: i64 = raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("node id `{raw}` is not an integer"),
    })?;
    if id < 0 {
        return Err(Error::validation(format!("line {line}: negative node id {id}")));
    }
    NodeId::try_from(id)
        .map_err(|_| Error::validation(format!("line {line}: node id {id} out of range")))
}

fn parse_real(rec: &StringRecord, col: usize, what: &str) -> Result<f64> {
    let raw = rec.get(col).unwrap_or("");
    raw.parse::<f64>().map_err(|_| Error::Parse {
        line: line_of(rec),
        message: format!("{what} `{raw}` is not a number"),
    })
}

/// Reads an interaction file with a header row.
///
/// Rows are stably sorted by timestamp; check [`TemporalGraph::was_resorted`]
/// to learn whether the file was out of order. Node features, if any, come
/// from a side file with columns `node_id,f0..fk`.
pub fn ingest_csv(
    path: &Path,
    schema: &CsvSchema,
    node_features: Option<&Path>,
) -> Result<TemporalGraph> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let src_col = column(&header, &schema.src)?;
    let dst_col = column(&header, &schema.dst)?;
    let ts_col = column(&header, &schema.timestamp)?;
    let label_col = schema
        .label
        .as_deref()
        .and_then(|name| header.iter().position(|h| h == name));
    let feat_cols = feature_columns(&header, &schema.features)?;

    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let src = parse_node(&rec, src_col)?;
        let dst = parse_node(&rec, dst_col)?;
        let timestamp = parse_real(&rec, ts_col, "timestamp")?;
        if !timestamp.is_finite() {
            return Err(Error::validation(format!("line {line}: non-finite timestamp")));
        }
        let label = match label_col {
            Some(c) => {
                let v = parse_real(&rec, c, "label")?;
                if v != 0.0 && v != 1.0 {
                    return Err(Error::Parse {
                        line,
                        message: format!("label {v} is not binary"),
                    });
                }
                Some(v == 1.0)
            }
            None => None,
        };
        let edge_feat = feat_cols
            .iter()
            .map(|&c| parse_real(&rec, c, "feature"))
            .collect::<Result<Vec<_>>>()?;
        rows.push(Interaction {
            src,
            dst,
            timestamp,
            edge_feat,
            label,
        });
    }

    let nodes = match node_features {
        Some(p) => read_node_features(p)?,
        None => NodeFeatures::default(),
    };
    TemporalGraph::from_interactions(rows, nodes, None)
}

/// Reads `node_id,f0..fk`. Nodes not listed get zero rows.
pub fn read_node_features(path: &Path) -> Result<NodeFeatures> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let id_col = column(&header, "node_id")?;
    let feat_cols = feature_columns(&header, &FeatureColumns::Prefix("f".into()))?;
    let dim = feat_cols.len();
    let mut data: Vec<f64> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let id = parse_node(&rec, id_col)? as usize;
        if data.len() < (id + 1) * dim {
            data.resize((id + 1) * dim, 0.0);
        }
        for (k, &c) in feat_cols.iter().enumerate() {
            data[id * dim + k] = parse_real(&rec, c, "node feature")?;
        }
    }
    Ok(NodeFeatures { dim, data })
}

/// Writes a graph back out in the format [`ingest_csv`] reads.
pub fn write_csv(g: &TemporalGraph, edges: &Path, nodes: Option<&Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(File::create(edges)?);
    let mut header = vec!["src".to_string(), "dst".into(), "timestamp".into()];
    if g.has_labels() {
        header.push("label".into());
    }
    header.extend((0..g.edge_dim()).map(|k| format!("f{k}")));
    writeln!(out, "{}", header.join(","))?;
    for e in 0..g.num_edges() {
        write!(out, "{},{},{}", g.src(e), g.dst(e), g.timestamp(e))?;
        if let Some(l) = g.label(e) {
            write!(out, ",{}", u8::from(l))?;
        }
        for x in g.edge_feat(e) {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;

    if let Some(path) = nodes {
        let mut out = std::io::BufWriter::new(File::create(path)?);
        let mut header = vec!["node_id".to_string()];
        header.extend((0..g.node_dim()).map(|k| format!("f{k}")));
        writeln!(out, "{}", header.join(","))?;
        for v in 0..g.num_nodes() {
            write!(out, "{v}")?;
            for x in g.node_feat(v as NodeId) {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
    }
    Ok(())
}
