use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use stgl_core::evaluation::Setting;
use stgl_core::experiment::run_experiment;
use stgl_core::graph::Direction;
use stgl_core::models::AlphaMode;
use stgl_core::sampling::SamplingMode;

use super::{run_parallel, DataArgs};
use crate::config::{default_eval, ModelArgs, Resolved};
use crate::ledger::{write_rows, ABLATION_HEADER};
use crate::manifest::RunManifest;
use crate::UsageError;

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma list of recent-1hop, recent-2hop, uniform-1hop, uniform-2hop.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub selections: Option<Vec<String>>,
    /// Comma list of bi, di.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub directions: Option<Vec<String>>,
    /// Comma list of trainable, fixed.
    #[arg(long = "alpha", value_delimiter = ',', num_args = 0..)]
    pub alphas: Option<Vec<String>>,
    #[arg(long, default_value = "stgl-runs")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub sampling: SamplingMode,
    pub hops: usize,
    pub direction: Direction,
    pub alpha: AlphaMode,
}

impl Cell {
    fn selection(&self) -> String {
        let s = match self.sampling {
            SamplingMode::Recent => "recent",
            SamplingMode::Uniform => "uniform",
        };
        format!("{s}-{}hop", self.hops)
    }
}

fn parse_selection(s: &str) -> Result<(SamplingMode, usize)> {
    Ok(match s {
        "recent-1hop" => (SamplingMode::Recent, 1),
        "recent-2hop" => (SamplingMode::Recent, 2),
        "uniform-1hop" => (SamplingMode::Uniform, 1),
        "uniform-2hop" => (SamplingMode::Uniform, 2),
        _ => return Err(UsageError(format!("unknown input selection `{s}`")).into()),
    })
}

fn parse_direction(s: &str) -> Result<Direction> {
    match s {
        "bi" => Ok(Direction::Bidirected),
        "di" => Ok(Direction::Directed),
        _ => Err(UsageError(format!("unknown direction `{s}` (bi or di)")).into()),
    }
}

fn parse_alpha(s: &str) -> Result<AlphaMode> {
    match s {
        "trainable" => Ok(AlphaMode::Trainable),
        "fixed" => Ok(AlphaMode::Fixed),
        _ => Err(UsageError(format!("unknown slot-weight mode `{s}` (trainable or fixed)")).into()),
    }
}

fn axis<T>(flag: &str, given: &Option<Vec<String>>, default: &[&str], parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let values: Vec<String> = match given {
        None => default.iter().map(|s| s.to_string()).collect(),
        Some(v) => v.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
    };
    if values.is_empty() {
        return Err(UsageError(format!("--{flag} selects nothing; the grid would be empty")).into());
    }
    values.iter().map(|s| parse(s)).collect()
}

pub fn grid(args: &AblateArgs) -> Result<Vec<Cell>> {
    let selections = axis("selections", &args.selections, &["recent-1hop", "recent-2hop", "uniform-1hop"], parse_selection)?;
    let directions = axis("directions", &args.directions, &["bi", "di"], parse_direction)?;
    let alphas = axis("alpha", &args.alphas, &["trainable", "fixed"], parse_alpha)?;
    let mut cells = Vec::new();
    for &(sampling, hops) in &selections {
        for &direction in &directions {
            for &alpha in &alphas {
                cells.push(Cell {
                    sampling,
                    hops,
                    direction,
                    alpha,
                });
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Serialize)]
struct AblateManifestConfig<'a> {
    #[serde(flatten)]
    resolved: &'a Resolved,
    cells: &'a [Cell],
    n_sub: usize,
    dataset: &'a str,
}

pub fn run(args: AblateArgs) -> Result<()> {
    let cells = grid(&args)?;
    let file = args.model.file()?;
    let ds = args.data.load(file.data.snapshot.as_deref(), file.data.name.as_deref())?;
    let resolved = args.model.resolve(&file, &ds.graph)?;
    let n_sub = resolved.n_sub_for(&ds.split);
    let mut specs = Vec::new();
    for cell in &cells {
        let mut spec = resolved.run_spec(default_eval(Setting::Transductive, 0), n_sub);
        spec.model.sampling = cell.sampling;
        spec.model.hops = cell.hops;
        spec.model.direction = cell.direction;
        spec.model.alpha = cell.alpha;
        spec.model
            .validate()
            .map_err(|e| UsageError(format!("cell {}: {e}", cell.selection())))?;
        for &seed in &resolved.seeds {
            specs.push((*cell, spec.clone(), seed));
        }
    }
    let config = AblateManifestConfig {
        resolved: &resolved,
        cells: &cells,
        n_sub,
        dataset: &ds.name,
    };
    let out = args.out.join("ablation.csv");
    let mut manifest = RunManifest::begin(
        args.out.join("ablation_manifest.json"),
        "ablate",
        &config,
        resolved.seeds.clone(),
        Some(&ds.path),
    )?;
    let result = run_parallel(args.jobs, &specs, |(cell, spec, seed)| {
        let started = Instant::now();
        let rec = run_experiment(&ds.graph, &ds.split, spec, *seed)?;
        let fla = rec.fla.as_ref().expect("alignment requested");
        let ge = rec.ge.as_ref().expect("alignment requested");
        let dir = match cell.direction {
            Direction::Bidirected => "bi",
            Direction::Directed => "di",
        };
        let alpha = match cell.alpha {
            AlphaMode::Trainable => "trainable",
            AlphaMode::Fixed => "fixed",
        };
        log::info!("{} {dir} {alpha} seed {seed}: FLA {:.4} AP {:.4}", cell.selection(), fla.fla, rec.metrics.ap);
        let line = format!(
            "{},{dir},{alpha},{seed},{},{},{},{},{}",
            cell.selection(),
            fla.fla,
            fla.r,
            ge.ge,
            rec.metrics.ap,
            rec.metrics.auc
        );
        Ok((line, format!("{} {dir} {alpha} seed {seed}", cell.selection()), started.elapsed().as_secs_f64()))
    });
    let result = result.and_then(|rows| {
        let lines: Vec<String> = rows.iter().map(|(l, _, _)| l.clone()).collect();
        write_rows(&out, ABLATION_HEADER, &lines)?;
        for (_, label, secs) in rows {
            manifest.timing(label, secs);
        }
        manifest.output(&out);
        Ok(())
    });
    manifest.finish(result.is_ok())?;
    result
}
