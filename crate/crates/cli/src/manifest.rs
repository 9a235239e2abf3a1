use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

/// Record of one command invocation. Written once before any work starts
/// and rewritten when the command ends.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub build: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub dataset: Option<String>,
    pub dataset_sha256: Option<String>,
    pub outputs: Vec<PathBuf>,
    pub timings: Vec<Timing>,
    pub status: Status,
    #[serde(skip)]
    path: PathBuf,
    #[serde(skip)]
    started: Option<Instant>,
}

pub fn build_id() -> String {
    let mut id = format!("stgl {}", env!("CARGO_PKG_VERSION"));
    if let Some(rev) = option_env!("STGL_BUILD_REV") {
        id.push_str(&format!(" ({rev})"));
    }
    id
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut r = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

impl RunManifest {
    pub fn begin(path: PathBuf, command: &str, config: impl Serialize, seeds: Vec<u64>, dataset: Option<&Path>) -> Result<RunManifest> {
        let dataset_sha256 = dataset.map(sha256_file).transpose()?;
        let m = RunManifest {
            command: command.to_string(),
            build: build_id(),
            config: serde_json::to_value(config)?,
            seeds,
            dataset: dataset.map(|p| p.display().to_string()),
            dataset_sha256,
            outputs: Vec::new(),
            timings: Vec::new(),
            status: Status::Running,
            path,
            started: Some(Instant::now()),
        };
        m.write()?;
        Ok(m)
    }

    pub fn output(&mut self, p: impl Into<PathBuf>) {
        self.outputs.push(p.into());
    }

    pub fn timing(&mut self, label: impl Into<String>, seconds: f64) {
        self.timings.push(Timing {
            label: label.into(),
            seconds,
        });
    }

    pub fn finish(mut self, ok: bool) -> Result<()> {
        if let Some(t) = self.started {
            self.timing("total", t.elapsed().as_secs_f64());
        }
        self.status = if ok { Status::Complete } else { Status::Failed };
        self.write()
    }

    fn write(&self) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&self.path, text).with_context(|| format!("writing {}", self.path.display()))
    }
}
