use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use stgl_core::graph::{
    chronological_split, ingest_csv, write_snapshot, CsvSchema, FeatureColumns, GraphStats, SplitWarning,
    DEFAULT_RATIOS,
};

use super::write_json;
use crate::manifest::RunManifest;
use crate::UsageError;

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    /// Interaction file with a header row.
    #[arg(long)]
    pub csv: PathBuf,
    /// Node feature file with columns `node_id,f0..fk`.
    #[arg(long)]
    pub node_features: Option<PathBuf>,
    /// Snapshot path; defaults to the CSV path with an `.stgl` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep feature vectors as read instead of clipping them to the unit ball.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, default_value = "src")]
    pub src_col: String,
    #[arg(long, default_value = "dst")]
    pub dst_col: String,
    #[arg(long, default_value = "timestamp")]
    pub time_col: String,
    #[arg(long, default_value = "label")]
    pub label_col: String,
    /// Edge feature columns are `<prefix><digits>`.
    #[arg(long, default_value = "f")]
    pub feature_prefix: String,
}

#[derive(Debug, Serialize)]
struct SplitSummary {
    train: usize,
    val: usize,
    test: usize,
    inductive_nodes: usize,
    warnings: Vec<SplitWarning>,
}

#[derive(Debug, Serialize)]
struct IngestStats {
    #[serde(flatten)]
    graph: GraphStats,
    resorted: bool,
    normalized: bool,
    split: SplitSummary,
}

pub fn run(args: IngestArgs) -> Result<()> {
    let csv = crate::resolve_data_path(args.csv.clone());
    if !csv.exists() {
        return Err(UsageError(format!("{}: no such file", csv.display())).into());
    }
    let nodes = args.node_features.clone().map(crate::resolve_data_path);
    if let Some(n) = &nodes {
        if !n.exists() {
            return Err(UsageError(format!("{}: no such file", n.display())).into());
        }
    }
    let out = args.out.clone().unwrap_or_else(|| csv.with_extension("stgl"));
    let stats_path = out.with_extension("stats.json");
    let manifest_path = out.with_extension("manifest.json");
    let mut manifest = RunManifest::begin(manifest_path, "ingest", &args, Vec::new(), Some(&csv))?;

    let started = Instant::now();
    let schema = CsvSchema {
        src: args.src_col.clone(),
        dst: args.dst_col.clone(),
        timestamp: args.time_col.clone(),
        label: Some(args.label_col.clone()),
        features: FeatureColumns::Prefix(args.feature_prefix.clone()),
    };
    let result = (|| -> Result<()> {
        let mut g = ingest_csv(&csv, &schema, nodes.as_deref())?;
        if g.was_resorted() {
            log::warn!("{} was not in timestamp order; rows were stably sorted", csv.display());
        }
        let resorted = g.was_resorted();
        if !args.no_normalize {
            g = g.normalize_features()?;
        }
        let split = chronological_split(&g, DEFAULT_RATIOS)?;
        for w in &split.warnings {
            log::warn!("split: {w:?}");
        }
        write_snapshot(&g, &out)?;
        let stats = IngestStats {
            graph: g.stats(),
            resorted,
            normalized: !args.no_normalize,
            split: SplitSummary {
                train: split.train().len(),
                val: split.val().len(),
                test: split.test().len(),
                inductive_nodes: split.inductive_nodes.len(),
                warnings: split.warnings.clone(),
            },
        };
        write_json(&stats_path, &stats)?;
        log::info!(
            "{} nodes, {} interactions -> {}",
            stats.graph.num_nodes,
            stats.graph.num_edges,
            out.display()
        );
        Ok(())
    })();
    manifest.timing("ingest", started.elapsed().as_secs_f64());
    if result.is_ok() {
        manifest.output(&out);
        manifest.output(&stats_path);
    }
    manifest.finish(result.is_ok())?;
    result
}
