use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use stgl_core::evaluation::{evaluate, MetricsReport, Setting};
use stgl_core::models::read_checkpoint;

use super::{load_snapshot, run_parallel, write_json, stem};
use crate::config::default_eval;
use crate::ledger::{append_rows, setting_name, LedgerRow, RUN_LEDGER_HEADER};
use crate::manifest::RunManifest;
use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingArg {
    Transductive,
    Inductive,
    Both,
}

impl SettingArg {
    fn settings(self) -> Vec<Setting> {
        match self {
            SettingArg::Transductive => vec![Setting::Transductive],
            SettingArg::Inductive => vec![Setting::Inductive],
            SettingArg::Both => vec![Setting::Transductive, Setting::Inductive],
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Dataset name for the ledger; defaults to the snapshot file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Checkpoints to evaluate.
    #[arg(long = "checkpoint")]
    pub checkpoints: Vec<PathBuf>,
    /// Evaluate every `.ckpt` file in this directory.
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "transductive")]
    pub setting: SettingArg,
    /// Negatives per positive for recall@k and MRR; 0 skips them.
    #[arg(long, default_value_t = 100)]
    pub rank_negatives: usize,
    /// Run ledger to append to; defaults to `ledger.csv` next to the first
    /// checkpoint.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Serialize)]
struct MetricsJson<'a> {
    checkpoint: String,
    method: &'a str,
    dataset: &'a str,
    seed: u64,
    #[serde(flatten)]
    metrics: &'a MetricsReport,
}

fn checkpoints(args: &EvalArgs) -> Result<Vec<PathBuf>> {
    let mut all = args.checkpoints.clone();
    if let Some(dir) = &args.run {
        let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
            .with_context(|| format!("listing {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "ckpt"))
            .collect();
        found.sort();
        all.extend(found);
    }
    if all.is_empty() {
        return Err(UsageError("nothing to evaluate: pass --checkpoint or --run".into()).into());
    }
    for p in &all {
        if !p.exists() {
            return Err(UsageError(format!("{}: no such checkpoint", p.display())).into());
        }
    }
    Ok(all)
}

pub fn run(args: EvalArgs) -> Result<()> {
    let ckpts = checkpoints(&args)?;
    let ds = load_snapshot(&args.data, args.name.as_deref())?;
    let out_dir = args
        .run
        .clone()
        .or_else(|| ckpts[0].parent().map(PathBuf::from))
        .unwrap_or_default();
    let ledger = args.ledger.clone().unwrap_or_else(|| out_dir.join("ledger.csv"));
    let mut manifest = RunManifest::begin(out_dir.join("eval_manifest.json"), "eval", &args, Vec::new(), Some(&ds.path))?;

    let jobs: Vec<(PathBuf, Setting)> = ckpts
        .iter()
        .flat_map(|c| args.setting.settings().into_iter().map(move |s| (c.clone(), s)))
        .collect();
    let result = run_parallel(args.jobs, &jobs, |(ckpt, setting)| {
        let started = Instant::now();
        let (model, seed) = read_checkpoint(ckpt).with_context(|| format!("reading {}", ckpt.display()))?;
        let opts = stgl_core::evaluation::EvalOptions {
            seed,
            ..default_eval(*setting, args.rank_negatives)
        };
        let report = evaluate(&model, &ds.graph, &ds.split, &opts)?;
        let method = model.config().method.name();
        let json_path = ckpt.with_file_name(format!("{}_{}_metrics.json", stem(ckpt), setting_name(*setting)));
        write_json(
            &json_path,
            &MetricsJson {
                checkpoint: ckpt.display().to_string(),
                method,
                dataset: &ds.name,
                seed,
                metrics: &report,
            },
        )?;
        log::info!("{} [{}]: AP {:.4} AUC {:.4}", ckpt.display(), setting_name(*setting), report.ap, report.auc);
        let row = LedgerRow::from_report(method, &ds.name, seed, &report).to_line();
        Ok((json_path, row, started.elapsed().as_secs_f64()))
    });
    let result = result.and_then(|rows| {
        let lines: Vec<String> = rows.iter().map(|(_, l, _)| l.clone()).collect();
        append_rows(&ledger, RUN_LEDGER_HEADER, &lines)?;
        for ((p, _, secs), (ckpt, s)) in rows.iter().zip(&jobs) {
            manifest.output(p);
            manifest.timing(format!("{} {}", ckpt.display(), setting_name(*s)), *secs);
        }
        manifest.output(&ledger);
        Ok(())
    });
    manifest.finish(result.is_ok())?;
    result
}
