use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use stgl_core::analysis::spearman;

use super::write_json;
use crate::ledger::{read_ledger, ABLATION_HEADER, SCATTER_HEADER};
use crate::UsageError;

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory holding ledger.csv, ge_ap.csv and/or ablation.csv.
    #[arg(long)]
    pub run: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Sample standard deviation; 0 for a single value.
pub fn mean_std(xs: &[f64]) -> MeanStd {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std, n }
}

#[derive(Debug, Serialize)]
struct MethodSummary {
    method: String,
    dataset: String,
    setting: String,
    ap: MeanStd,
    auc: MeanStd,
    mrr: Option<MeanStd>,
}

#[derive(Debug, Serialize)]
struct ScatterSummary {
    pairs: usize,
    spearman_ge_ap: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AblationSummary {
    selection: String,
    direction: String,
    alpha: String,
    fla: MeanStd,
    ge: MeanStd,
    ap: MeanStd,
}

#[derive(Debug, Default, Serialize)]
struct Report {
    runs: Vec<MethodSummary>,
    scatter: Option<ScatterSummary>,
    ablation: Vec<AblationSummary>,
}

fn read_table(path: &Path, header: &str) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        bail!("{}: unexpected header", path.display());
    }
    let width = header.split(',').count();
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<String> = l.split(',').map(str::to_string).collect();
            if f.len() != width {
                bail!("{}: row `{l}` has {} fields, expected {width}", path.display(), f.len());
            }
            Ok(f)
        })
        .collect()
}

fn num(s: &str) -> Result<f64> {
    s.parse().with_context(|| format!("`{s}` is not a number"))
}

pub fn run(args: ReportArgs) -> Result<()> {
    if !args.run.is_dir() {
        return Err(UsageError(format!("{}: not a directory", args.run.display())).into());
    }
    let ledger = args.run.join("ledger.csv");
    let scatter = args.run.join("ge_ap.csv");
    let ablation = args.run.join("ablation.csv");
    if !ledger.exists() && !scatter.exists() && !ablation.exists() {
        return Err(UsageError(format!("{}: no ledgers to report on", args.run.display())).into());
    }
    let mut report = Report::default();

    if ledger.exists() {
        let mut groups: BTreeMap<(String, String, String), Vec<_>> = BTreeMap::new();
        for row in read_ledger(&ledger)? {
            groups
                .entry((row.method.clone(), row.dataset.clone(), row.setting.clone()))
                .or_default()
                .push(row);
        }
        println!("{:<8} {:<12} {:<13} {:>17} {:>17} {:>17}", "method", "dataset", "setting", "AP", "AUC", "MRR");
        for ((method, dataset, setting), rows) in groups {
            let ap = mean_std(&rows.iter().map(|r| r.ap).collect::<Vec<_>>());
            let auc = mean_std(&rows.iter().map(|r| r.auc).collect::<Vec<_>>());
            let mrrs: Vec<f64> = rows.iter().filter_map(|r| r.mrr).collect();
            let mrr = (!mrrs.is_empty()).then(|| mean_std(&mrrs));
            let fmt = |m: &MeanStd| format!("{:.4} ± {:.4}", m.mean, m.std);
            println!(
                "{method:<8} {dataset:<12} {setting:<13} {:>17} {:>17} {:>17}",
                fmt(&ap),
                fmt(&auc),
                mrr.as_ref().map(fmt).unwrap_or_else(|| "-".into())
            );
            report.runs.push(MethodSummary {
                method,
                dataset,
                setting,
                ap,
                auc,
                mrr,
            });
        }
    }

    if scatter.exists() {
        let rows = read_table(&scatter, SCATTER_HEADER)?;
        let mut ge = Vec::new();
        let mut ap = Vec::new();
        for r in rows.iter().filter(|r| !r[5].is_empty()) {
            ge.push(num(&r[3])?);
            ap.push(num(&r[5])?);
        }
        let rho = if ge.len() >= 2 { spearman(&ge, &ap).ok() } else { None };
        match rho {
            Some(v) => println!("GE vs AP: spearman {v:.3} over {} runs", ge.len()),
            None => println!("GE vs AP: {} paired runs, not enough to correlate", ge.len()),
        }
        report.scatter = Some(ScatterSummary {
            pairs: ge.len(),
            spearman_ge_ap: rho,
        });
    }

    if ablation.exists() {
        let mut groups: BTreeMap<(String, String, String), Vec<[f64; 3]>> = BTreeMap::new();
        for r in read_table(&ablation, ABLATION_HEADER)? {
            groups
                .entry((r[0].clone(), r[1].clone(), r[2].clone()))
                .or_default()
                .push([num(&r[4])?, num(&r[6])?, num(&r[7])?]);
        }
        println!("{:<14} {:<4} {:<10} {:>14} {:>14} {:>8}", "selection", "dir", "alpha", "FLA", "GE", "AP");
        for ((selection, direction, alpha), vals) in groups {
            let col = |i: usize| mean_std(&vals.iter().map(|v| v[i]).collect::<Vec<_>>());
            let (fla, ge, ap) = (col(0), col(1), col(2));
            println!(
                "{selection:<14} {direction:<4} {alpha:<10} {:>14.4} {:>14.4} {:>8.4}",
                fla.mean, ge.mean, ap.mean
            );
            report.ablation.push(AblationSummary {
                selection,
                direction,
                alpha,
                fla,
                ge,
                ap,
            });
        }
    }

    write_json(&args.run.join("report.json"), &report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std() {
        let m = mean_std(&[1.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[5.0]).std, 0.0);
    }
}
