//! Flat CSV ledgers shared between commands.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stgl_core::evaluation::{MetricsReport, Setting};

pub const RUN_LEDGER_HEADER: &str = "method,dataset,seed,setting,ap,auc,r1,r5,mrr";

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    pub setting: String,
    pub ap: f64,
    pub auc: f64,
    pub r1: Option<f64>,
    pub r5: Option<f64>,
    pub mrr: Option<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        Ok(Some(s.parse()?))
    }
}

pub fn setting_name(s: Setting) -> &'static str {
    match s {
        Setting::Transductive => "transductive",
        Setting::Inductive => "inductive",
    }
}

impl LedgerRow {
    pub fn from_report(method: &str, dataset: &str, seed: u64, m: &MetricsReport) -> LedgerRow {
        LedgerRow {
            method: method.to_string(),
            dataset: dataset.to_string(),
            seed,
            setting: setting_name(m.setting).to_string(),
            ap: m.ap,
            auc: m.auc,
            r1: m.recall_at.get(&1).copied(),
            r5: m.recall_at.get(&5).copied(),
            mrr: m.mrr,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.method,
            self.dataset,
            self.seed,
            self.setting,
            self.ap,
            self.auc,
            opt(self.r1),
            opt(self.r5),
            opt(self.mrr)
        )
    }

    pub fn parse(line: &str) -> Result<LedgerRow> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            bail!("ledger row has {} fields, expected 9: `{line}`", f.len());
        }
        Ok(LedgerRow {
            method: f[0].to_string(),
            dataset: f[1].to_string(),
            seed: f[2].parse()?,
            setting: f[3].to_string(),
            ap: f[4].parse()?,
            auc: f[5].parse()?,
            r1: parse_opt(f[6])?,
            r5: parse_opt(f[7])?,
            mrr: parse_opt(f[8])?,
        })
    }
}

/// Appends rows, writing the header first when the file is new or empty.
pub fn append_rows(path: &Path, header: &str, lines: &[String]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        writeln!(f, "{header}")?;
    } else {
        let existing = std::fs::read_to_string(path)?;
        if existing.lines().next() != Some(header) {
            bail!("{} has a different header than `{header}`", path.display());
        }
    }
    for l in lines {
        writeln!(f, "{l}")?;
    }
    Ok(())
}

pub fn write_rows(path: &Path, header: &str, lines: &[String]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = String::from(header);
    text.push('\n');
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRow>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RUN_LEDGER_HEADER => {}
        _ => bail!("{} is not a run ledger", path.display()),
    }
    lines.filter(|l| !l.trim().is_empty()).map(LedgerRow::parse).collect()
}

/// Alignment report as written by `fla`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaJson {
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    pub n_sub: usize,
    pub p: usize,
    pub fla: f64,
    pub r: f64,
    pub c: f64,
    pub d: f64,
    pub ge: f64,
    pub jitter: f64,
    pub overparam_ok: bool,
    /// How example labels were built.
    pub labels: String,
}

pub const LABEL_SCHEME: &str = "last n_sub/2 training links +1, one uniform negative each -1";

pub const SCATTER_HEADER: &str = "method,dataset,seed,ge,fla,ap";

pub const ABLATION_HEADER: &str = "selection,direction,alpha,seed,fla,r,ge,ap,auc";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_row_roundtrip() {
        let row = LedgerRow {
            method: "stone".into(),
            dataset: "uci".into(),
            seed: 3,
            setting: "transductive".into(),
            ap: 0.5,
            auc: 0.25,
            r1: None,
            r5: Some(1.0),
            mrr: Some(0.125),
        };
        assert_eq!(LedgerRow::parse(&row.to_line()).unwrap(), row);
        assert!(LedgerRow::parse("a,b").is_err());
    }

    #[test]
    fn append_checks_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        append_rows(&p, "a,b", &["1,2".into()]).unwrap();
        append_rows(&p, "a,b", &["3,4".into()]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a,b\n1,2\n3,4\n");
        assert!(append_rows(&p, "x,y", &[]).is_err());
    }
}
