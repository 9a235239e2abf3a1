use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use stgl_core::experiment::score_alignment;
use stgl_core::models::Model;
use stgl_core::rng::{stream_rng, Stream};

use super::{run_parallel, write_json, DataArgs};
use crate::config::{ModelArgs, Resolved};
use crate::ledger::{read_ledger, write_rows, FlaJson, LABEL_SCHEME, SCATTER_HEADER};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Args)]
pub struct FlaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Directory for the per-seed reports and `ge_ap.csv`.
    #[arg(long, default_value = "stgl-runs")]
    pub out: PathBuf,
    /// Run ledger whose transductive AP is paired with each GE; defaults to
    /// `ledger.csv` in the output directory.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Serialize)]
struct FlaManifestConfig<'a> {
    #[serde(flatten)]
    resolved: &'a Resolved,
    n_sub: usize,
    dataset: &'a str,
}

pub fn report_name(method: &str, seed: u64) -> String {
    format!("fla_{method}_seed{seed}.json")
}

pub fn run(args: FlaArgs) -> Result<()> {
    let file = args.model.file()?;
    let ds = args.data.load(file.data.snapshot.as_deref(), file.data.name.as_deref())?;
    let resolved = args.model.resolve(&file, &ds.graph)?;
    let n_sub = resolved.n_sub_for(&ds.split);
    let method = resolved.model.method.name();
    let config = FlaManifestConfig {
        resolved: &resolved,
        n_sub,
        dataset: &ds.name,
    };
    let mut manifest = RunManifest::begin(
        args.out.join(format!("fla_{method}_manifest.json")),
        "fla",
        &config,
        resolved.seeds.clone(),
        Some(&ds.path),
    )?;

    let result = run_parallel(args.jobs, &resolved.seeds, |&seed| {
        let started = Instant::now();
        // alignment is defined at initialization, so no checkpoint is read
        let model = Model::init(resolved.model.clone(), &mut stream_rng(seed, Stream::Init))?;
        let (fla, ge) = score_alignment(&model, &ds.graph, &ds.split, n_sub, resolved.jitter, resolved.tau, seed)?;
        let report = FlaJson {
            method: method.to_string(),
            dataset: ds.name.clone(),
            seed,
            n_sub: fla.n_sub,
            p: fla.p,
            fla: fla.fla,
            r: fla.r,
            c: ge.c,
            d: ge.d,
            ge: ge.ge,
            jitter: fla.jitter,
            overparam_ok: fla.overparam_ok,
            labels: LABEL_SCHEME.to_string(),
        };
        if !fla.overparam_ok {
            log::warn!("{method} seed {seed}: N_sub = {} exceeds p = {}; the bound does not apply", fla.n_sub, fla.p);
        }
        let path = args.out.join(report_name(method, seed));
        write_json(&path, &report)?;
        log::info!("{method} seed {seed}: FLA {:.4} GE {:.4}", report.fla, report.ge);
        Ok((seed, path, started.elapsed().as_secs_f64()))
    });
    let result = result.and_then(|per_seed| {
        for (seed, path, secs) in per_seed {
            manifest.output(path);
            manifest.timing(format!("seed {seed}"), secs);
        }
        let ledger = args.ledger.clone().unwrap_or_else(|| args.out.join("ledger.csv"));
        let scatter = args.out.join("ge_ap.csv");
        write_scatter(&args.out, &ledger, &scatter)?;
        manifest.output(scatter);
        Ok(())
    });
    manifest.finish(result.is_ok())?;
    result
}

/// Rebuilds the GE/AP scatter from every alignment report in `dir`,
/// pairing each with the last transductive ledger row for the same method,
/// dataset and seed. AP is left empty when no such row exists.
pub fn write_scatter(dir: &Path, ledger: &Path, out: &Path) -> Result<()> {
    let mut ap: BTreeMap<(String, String, u64), f64> = BTreeMap::new();
    if ledger.exists() {
        for row in read_ledger(ledger)? {
            if row.setting == "transductive" {
                ap.insert((row.method, row.dataset, row.seed), row.ap);
            }
        }
    }
    let mut reports: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            name.starts_with("fla_") && name.ends_with(".json") && !name.ends_with("_manifest.json")
        })
        .collect();
    reports.sort();
    let mut rows = Vec::new();
    for p in reports {
        let text = std::fs::read_to_string(&p)?;
        let r: FlaJson = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        let key = (r.method.clone(), r.dataset.clone(), r.seed);
        let ap = ap.get(&key).map(|v| v.to_string()).unwrap_or_default();
        rows.push(format!("{},{},{},{},{},{ap}", r.method, r.dataset, r.seed, r.ge, r.fla));
    }
    write_rows(out, SCATTER_HEADER, &rows)
}
