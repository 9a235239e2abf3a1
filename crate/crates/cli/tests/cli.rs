use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stgl_core::analysis::link_jacobian;
use stgl_core::graph::{chronological_split, read_snapshot, DEFAULT_RATIOS};
use stgl_core::models::{FeatureLayout, Method, Model, ModelConfig};
use stgl_core::rng::{stream_rng, Stream};

fn stgl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stgl"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("STGL_DATA_DIR")
        .output()
        .expect("spawn stgl")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 240 interactions with two edge features; node `i` mostly talks to
/// `i + 1`, and nodes 20..24 only show up near the end.
fn toy_csv(dir: &Path) -> PathBuf {
    let mut text = String::from("src,dst,timestamp,f0,f1\n");
    for e in 0..240u32 {
        let u = e % 20;
        let v = if e >= 200 && e % 4 == 0 {
            20 + (e / 4) % 4
        } else if e % 3 == 0 {
            (u + 7) % 20
        } else {
            (u + 1) % 20
        };
        text.push_str(&format!("{u},{v},{},{},{}\n", e as f64 * 0.5, (e % 5) as f64 * 0.1, 0.3));
    }
    let p = dir.join("toy.csv");
    std::fs::write(&p, text).unwrap();
    p
}

fn ingest(dir: &Path) -> PathBuf {
    let csv = toy_csv(dir);
    let snap = dir.join("toy.stgl");
    ok(&stgl(&["ingest", "--csv", s(&csv), "--out", s(&snap)]));
    snap
}

const SMALL: &[&str] = &[
    "--hidden", "8", "--mlp-hidden", "8", "--time-dim", "4", "--k", "3", "--epochs", "2", "--batch-size", "60",
    "--lr", "0.001",
];

#[test]
fn ingest_writes_snapshot_stats_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let g = read_snapshot(&snap).unwrap();
    assert_eq!(g.num_nodes(), 24);
    assert_eq!(g.num_edges(), 240);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("toy.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["num_nodes"], 24);
    assert_eq!(stats["split"]["train"], 168);
    assert_eq!(stats["normalized"], true);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("toy.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["dataset_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn no_normalize_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let snap = dir.path().join("raw.stgl");
    ok(&stgl(&["ingest", "--csv", s(&csv), "--out", s(&snap), "--no-normalize"]));
    let manifest = std::fs::read_to_string(dir.path().join("raw.manifest.json")).unwrap();
    assert!(manifest.contains("\"no_normalize\": true"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = stgl(&["ingest", "--csv", s(&dir.path().join("absent.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no such file"));

    let snap = ingest(dir.path());
    let out = stgl(&["train", "--data", s(&snap), "--method", "attention"]);
    assert_eq!(out.status.code(), Some(2));

    let out = stgl(&["ablate", "--data", s(&snap), "--selections", ""]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[model]\nwidth = 3\n").unwrap();
    let out = stgl(&["train", "--data", s(&snap), "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_eval_fla_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let run = dir.path().join("run");
    let mut args = vec!["train", "--data", s(&snap), "--method", "stone", "--seeds", "0..1", "--jobs", "2", "--out", s(&run)];
    args.extend_from_slice(SMALL);
    ok(&stgl(&args));
    for seed in 0..2 {
        assert!(run.join(format!("stone_seed{seed}.ckpt")).exists());
        let hist = std::fs::read_to_string(run.join(format!("stone_seed{seed}_history.csv"))).unwrap();
        assert!(hist.starts_with("epoch,train_ap,val_ap,loss,seconds\n"));
        assert_eq!(hist.lines().count(), 3);
    }

    ok(&stgl(&["eval", "--data", s(&snap), "--run", s(&run), "--setting", "both", "--rank-negatives", "10"]));
    let ledger = std::fs::read_to_string(run.join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 5);
    assert!(ledger.lines().nth(1).unwrap().starts_with("stone,toy,0,transductive,"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("stone_seed1_transductive_metrics.json")).unwrap())
            .unwrap();
    let ap = metrics["ap"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&ap));

    let mut args = vec!["fla", "--data", s(&snap), "--method", "stone", "--seeds", "0..1", "--nsub", "20", "--out", s(&run)];
    args.extend_from_slice(SMALL);
    ok(&stgl(&args));
    let scatter = std::fs::read_to_string(run.join("ge_ap.csv")).unwrap();
    let lines: Vec<&str> = scatter.lines().collect();
    assert_eq!(lines[0], "method,dataset,seed,ge,fla,ap");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("stone,toy,0,"));
    assert!(!lines[1].ends_with(','), "AP should be paired from the ledger: {}", lines[1]);

    ok(&stgl(&["report", "--run", s(&run)]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    assert_eq!(report["scatter"]["pairs"], 2);
}

#[test]
fn metrics_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let run = dir.path().join(name);
        let mut args = vec!["train", "--data", s(&snap), "--method", "rnn", "--seeds", "3", "--out", s(&run)];
        args.extend_from_slice(SMALL);
        ok(&stgl(&args));
        ok(&stgl(&["eval", "--data", s(&snap), "--run", s(&run), "--rank-negatives", "5"]));
        outputs.push((
            std::fs::read(run.join("rnn_seed3.ckpt")).unwrap(),
            std::fs::read_to_string(run.join("rnn_seed3_transductive_metrics.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    // the checkpoint path differs between the two directories
    let strip = |t: &str| t.lines().filter(|l| !l.contains("\"checkpoint\"")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&outputs[0].1), strip(&outputs[1].1));
}

#[test]
fn fla_with_two_examples_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let out = dir.path().join("fla");
    let mut args = vec!["fla", "--data", s(&snap), "--seeds", "4", "--nsub", "2", "--out", s(&out)];
    args.extend_from_slice(SMALL);
    ok(&stgl(&args));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("fla_stone_seed4.json")).unwrap()).unwrap();
    assert_eq!(report["overparam_ok"], true);
    assert_eq!(report["n_sub"], 2);

    let g = read_snapshot(&snap).unwrap();
    let split = chronological_split(&g, DEFAULT_RATIOS).unwrap();
    let mut cfg = ModelConfig::new(Method::Stone, FeatureLayout::for_graph(&g, 4));
    cfg.hidden = 8;
    cfg.mlp_hidden = 8;
    cfg.k = 3;
    let model = Model::init(cfg, &mut stream_rng(4, Stream::Init)).unwrap();
    let j = link_jacobian(&model, &g, &split, 2, 4).unwrap();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (a, b) = (j.row(0), j.row(1));
    let (k00, k01, k11) = (dot(a, a), dot(a, b), dot(b, b));
    let det = k00 * k11 - k01 * k01;
    let (y0, y1) = (j.labels[0], j.labels[1]);
    let expected = (y0 * y0 * k11 - 2.0 * y0 * y1 * k01 + y1 * y1 * k00) / det;
    let got = report["fla"].as_f64().unwrap();
    assert!((got - expected).abs() <= 1e-8 * expected.abs(), "{got} vs {expected}");
}

#[test]
fn algorithm1_mode_writes_selected_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let out = dir.path().join("alg1");
    let mut args = vec![
        "train", "--data", s(&snap), "--method", "gnn", "--algorithm1", "--n", "25", "--eta", "0.05", "--out", s(&out),
    ];
    args.extend_from_slice(SMALL);
    ok(&stgl(&args));
    let losses = std::fs::read_to_string(out.join("gnn_seed0_online.csv")).unwrap();
    assert_eq!(losses.lines().count(), 26);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("gnn_seed0_alg1.json")).unwrap()).unwrap();
    assert!(summary["selected"].as_u64().unwrap() < 25);
    assert!(out.join("gnn_seed0_alg1.ckpt").exists());
}

#[test]
fn ablation_cell_has_fla_and_ap() {
    let dir = tempfile::tempdir().unwrap();
    let snap = ingest(dir.path());
    let out = dir.path().join("abl");
    let mut args = vec![
        "ablate", "--data", s(&snap), "--selections", "recent-1hop", "--directions", "bi,di", "--alpha", "fixed",
        "--nsub", "10", "--out", s(&out), "--jobs", "2",
    ];
    args.extend_from_slice(SMALL);
    ok(&stgl(&args));
    let csv = std::fs::read_to_string(out.join("ablation.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "selection,direction,alpha,seed,fla,r,ge,ap,auc");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("recent-1hop,bi,fixed,0,"));
    assert!(lines[2].starts_with("recent-1hop,di,fixed,0,"));
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').skip(4).map(|x| x.parse().unwrap()).collect();
        assert!(f.iter().all(|x| x.is_finite()));
    }
}
