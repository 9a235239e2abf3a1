pub mod ablate;
pub mod eval;
pub mod fla;
pub mod ingest;
pub mod report;
pub mod train;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;

use stgl_core::graph::{chronological_split, read_snapshot, SplitSpec, TemporalGraph, DEFAULT_RATIOS};

use crate::UsageError;

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Snapshot written by `ingest`; relative paths are also tried under
    /// $STGL_DATA_DIR.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

pub struct Dataset {
    pub path: PathBuf,
    pub name: String,
    pub graph: TemporalGraph,
    pub split: SplitSpec,
}

impl DataArgs {
    /// The flag wins over `[data] snapshot` in the config file.
    pub fn load(&self, from_file: Option<&Path>, name: Option<&str>) -> Result<Dataset> {
        let path = self
            .data
            .clone()
            .or_else(|| from_file.map(Path::to_path_buf))
            .ok_or_else(|| UsageError("no dataset: pass --data or set [data] snapshot".into()))?;
        load_snapshot(&path, name)
    }
}

pub fn load_snapshot(path: &Path, name: Option<&str>) -> Result<Dataset> {
    let path = crate::resolve_data_path(path.to_path_buf());
    if !path.exists() {
        return Err(UsageError(format!("{}: no such file", path.display())).into());
    }
    let graph = read_snapshot(&path).with_context(|| format!("reading {}", path.display()))?;
    let split = chronological_split(&graph, DEFAULT_RATIOS)?;
    let name = name.map(str::to_string).unwrap_or_else(|| stem(&path));
    Ok(Dataset {
        path,
        name,
        graph,
        split,
    })
}

pub fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}

/// Runs `f` over `items` on at most `jobs` threads, keeping input order.
pub fn run_parallel<T, R, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if jobs == 0 {
        return Err(UsageError("--jobs must be at least 1".into()).into());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| items.par_iter().map(&f).collect())
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
