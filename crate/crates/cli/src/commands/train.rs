use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use stgl_core::models::{write_checkpoint, Model};
use stgl_core::rng::{stream_rng, Stream};
use stgl_core::training::{online_sgd_graph, train_link_prediction, TrainConfig};

use super::{run_parallel, write_json, DataArgs, Dataset};
use crate::config::{ModelArgs, Resolved};
use crate::manifest::RunManifest;
use crate::UsageError;

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory for checkpoints, histories and the manifest.
    #[arg(long, default_value = "stgl-runs")]
    pub out: PathBuf,
    /// Seeds trained concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Plain online SGD with logistic loss over the training stream instead
    /// of mini-batch training; returns a uniformly drawn iterate.
    #[arg(long)]
    pub algorithm1: bool,
    /// Online SGD iterations.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Online SGD step size.
    #[arg(long, default_value_t = 0.01)]
    pub eta: f64,
}

#[derive(Debug, Serialize)]
struct TrainManifestConfig<'a> {
    #[serde(flatten)]
    resolved: &'a Resolved,
    dataset: &'a str,
    algorithm1: Option<(usize, f64)>,
}

#[derive(Debug, Serialize)]
struct OnlineSummary {
    seed: u64,
    n: usize,
    eta: f64,
    selected: usize,
    grad_evals: usize,
    mean_loss: f64,
}

pub fn checkpoint_name(method: &str, seed: u64) -> String {
    format!("{method}_seed{seed}.ckpt")
}

pub fn run(args: TrainArgs) -> Result<()> {
    let file = args.model.file()?;
    let ds = args.data.load(file.data.snapshot.as_deref(), file.data.name.as_deref())?;
    let resolved = args.model.resolve(&file, &ds.graph)?;
    if args.algorithm1 && (args.n == 0 || !(args.eta > 0.0)) {
        return Err(UsageError("--algorithm1 needs --n >= 1 and --eta > 0".into()).into());
    }
    let method = resolved.model.method.name();
    let config = TrainManifestConfig {
        resolved: &resolved,
        dataset: &ds.name,
        algorithm1: args.algorithm1.then_some((args.n, args.eta)),
    };
    let tag = if args.algorithm1 { "alg1" } else { "train" };
    let mut manifest = RunManifest::begin(
        args.out.join(format!("{method}_{tag}_manifest.json")),
        &format!("train{}", if args.algorithm1 { " --algorithm1" } else { "" }),
        &config,
        resolved.seeds.clone(),
        Some(&ds.path),
    )?;

    let result = run_parallel(args.jobs, &resolved.seeds, |&seed| {
        let started = Instant::now();
        let outputs = if args.algorithm1 {
            train_online(&args, &ds, &resolved, seed)?
        } else {
            train_seed(&args.out, &ds, &resolved, seed)?
        };
        Ok((seed, outputs, started.elapsed().as_secs_f64()))
    });
    match &result {
        Ok(per_seed) => {
            for (seed, outputs, secs) in per_seed {
                outputs.iter().for_each(|p| manifest.output(p));
                manifest.timing(format!("seed {seed}"), *secs);
            }
        }
        Err(e) => log::error!("training failed: {e:#}"),
    }
    manifest.finish(result.is_ok())?;
    result.map(|_| ())
}

fn init_model(resolved: &Resolved, seed: u64) -> Result<Model> {
    Ok(Model::init(resolved.model.clone(), &mut stream_rng(seed, Stream::Init))?)
}

fn train_seed(out: &Path, ds: &Dataset, resolved: &Resolved, seed: u64) -> Result<Vec<PathBuf>> {
    let method = resolved.model.method.name();
    let model = init_model(resolved, seed)?;
    let cfg = TrainConfig {
        seed,
        ..resolved.train.clone()
    };
    let outcome = train_link_prediction(&model, &ds.graph, &ds.split, &cfg)?;
    std::fs::create_dir_all(out)?;
    let ckpt = out.join(checkpoint_name(method, seed));
    write_checkpoint(&outcome.model, seed, &ckpt)?;
    let hist = out.join(format!("{method}_seed{seed}_history.csv"));
    outcome.history.save_csv(&hist)?;
    log::info!(
        "{method} seed {seed}: {} epochs, best val AP {}",
        outcome.history.len(),
        outcome.best_val_ap.map_or("n/a".into(), |v| format!("{v:.4}"))
    );
    Ok(vec![ckpt, hist])
}

fn train_online(args: &TrainArgs, ds: &Dataset, resolved: &Resolved, seed: u64) -> Result<Vec<PathBuf>> {
    let method = resolved.model.method.name();
    let mut model = init_model(resolved, seed)?;
    let res = online_sgd_graph(&mut model, &ds.graph, &ds.split, args.eta, args.n, seed)?;
    model.set_theta(res.theta_tilde())?;
    std::fs::create_dir_all(&args.out)?;
    let ckpt = args.out.join(format!("{method}_seed{seed}_alg1.ckpt"));
    write_checkpoint(&model, seed, &ckpt)?;

    let losses = args.out.join(format!("{method}_seed{seed}_online.csv"));
    let mut w = std::io::BufWriter::new(std::fs::File::create(&losses)?);
    writeln!(w, "iteration,loss")?;
    for (i, l) in res.losses.iter().enumerate() {
        writeln!(w, "{i},{l}")?;
    }
    w.flush()?;

    let summary_path = args.out.join(format!("{method}_seed{seed}_alg1.json"));
    let summary = OnlineSummary {
        seed,
        n: args.n,
        eta: args.eta,
        selected: res.selected,
        grad_evals: res.grad_evals,
        mean_loss: res.losses.iter().sum::<f64>() / res.losses.len() as f64,
    };
    write_json(&summary_path, &summary)?;
    Ok(vec![ckpt, losses, summary_path])
}
