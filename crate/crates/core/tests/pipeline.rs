use std::collections::HashSet;

use stgl_core::analysis::{compute_fla, link_jacobian, min_norm_perturbation, perturbation_norm};
use stgl_core::evaluation::{evaluate, evaluate_range, EvalOptions, FnScorer, Setting};
use stgl_core::graph::{chronological_split, SplitSpec, TemporalGraph, DEFAULT_RATIOS};
use stgl_core::models::{read_checkpoint, write_checkpoint, FeatureLayout, Method, Model, ModelConfig};
use stgl_core::rng::{stream_rng, Stream};
use stgl_core::synthetic::RecencyStream;
use stgl_core::training::{train_link_prediction, NegativeSampler, TrainConfig};

fn stream(num_edges: usize) -> (TemporalGraph, SplitSpec) {
    let g = RecencyStream {
        num_edges,
        num_nodes: 60,
        ..RecencyStream::default()
    }
    .generate()
    .unwrap();
    let split = chronological_split(&g, DEFAULT_RATIOS).unwrap();
    (g, split)
}

fn small(g: &TemporalGraph, method: Method) -> ModelConfig {
    let mut cfg = ModelConfig::new(method, FeatureLayout::for_graph(g, 8));
    cfg.hidden = 16;
    cfg.mlp_hidden = 16;
    cfg.k = 5;
    cfg
}

fn init(cfg: ModelConfig, seed: u64) -> Model {
    Model::init(cfg, &mut stream_rng(seed, Stream::Init)).unwrap()
}

fn quick_train(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        lr: 1e-3,
        batch_size: 100,
        max_epochs: epochs,
        patience: 5,
        seed,
        ..TrainConfig::default()
    }
}

fn no_ranks() -> EvalOptions {
    EvalOptions {
        rank_negatives: 0,
        ..EvalOptions::default()
    }
}

#[test]
fn init_is_deterministic_per_seed() {
    let (g, _) = stream(200);
    let cfg = small(&g, Method::Stone);
    assert_eq!(init(cfg.clone(), 3), init(cfg.clone(), 3));
    assert_ne!(init(cfg.clone(), 3).theta(), init(cfg, 4).theta());
}

#[test]
fn training_is_reproducible_and_zero_epochs_is_a_no_op() {
    let (g, split) = stream(400);
    for method in [Method::Stone, Method::Memory] {
        let model = init(small(&g, method), 1);
        let a = train_link_prediction(&model, &g, &split, &quick_train(7, 2)).unwrap();
        let b = train_link_prediction(&model, &g, &split, &quick_train(7, 2)).unwrap();
        assert_eq!(a.model, b.model, "{method:?}");
        let strip = |h: &stgl_core::training::TrainHistory| {
            h.epochs.iter().map(|e| (e.train_ap, e.val_ap, e.loss)).collect::<Vec<_>>()
        };
        assert_eq!(strip(&a.history), strip(&b.history));
        assert_ne!(a.model.theta(), model.theta());

        let none = train_link_prediction(&model, &g, &split, &quick_train(7, 0)).unwrap();
        assert!(none.history.is_empty());
        assert_eq!(none.best_epoch, None);
        assert_eq!(none.model, model);
    }
}

#[test]
fn memory_evaluation_replays_deterministically() {
    let (g, split) = stream(400);
    let model = init(small(&g, Method::Memory), 2);
    let a = evaluate(&model, &g, &split, &EvalOptions::default()).unwrap();
    let b = evaluate(&model, &g, &split, &EvalOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_eval, split.test().len());
}

#[test]
fn checkpoint_roundtrip_preserves_scores() {
    let (g, split) = stream(300);
    let dir = tempfile::tempdir().unwrap();
    for method in [Method::Stone, Method::Gnn, Method::Rnn, Method::Memory] {
        let mut cfg = small(&g, method);
        if method == Method::Gnn {
            cfg.layers = 2;
        }
        let model = init(cfg, 5);
        let p = dir.path().join(format!("{method:?}.ckpt"));
        write_checkpoint(&model, 5, &p).unwrap();
        let (back, seed) = read_checkpoint(&p).unwrap();
        assert_eq!(seed, 5);
        assert_eq!(back, model);
        let opts = no_ranks();
        assert_eq!(evaluate(&back, &g, &split, &opts).unwrap(), evaluate(&model, &g, &split, &opts).unwrap());
    }
}

#[test]
fn oracle_and_constant_scorers() {
    let (g, split) = stream(300);
    let truth: HashSet<(u32, u32, u64)> = (0..g.num_edges())
        .map(|e| (g.src(e), g.dst(e), g.timestamp(e).to_bits()))
        .collect();
    let neg = NegativeSampler::All(g.num_nodes());
    let opts = EvalOptions::default();
    let mut oracle = FnScorer(|s, d, t: f64| if truth.contains(&(s, d, t.to_bits())) { 1.0 } else { 0.0 });
    let m = evaluate_range(&mut oracle, &g, split.test(), None, &neg, &opts).unwrap();
    assert_eq!((m.ap, m.auc, m.mrr), (1.0, 1.0, Some(1.0)));

    let mut constant = FnScorer(|_, _, _| 0.3);
    let m = evaluate_range(&mut constant, &g, split.test(), None, &neg, &opts).unwrap();
    assert_eq!(m.auc, 0.5);
    assert_eq!(m.ap, 0.5);
    assert!((m.mrr.unwrap() - 1.0 / 51.0).abs() < 1e-15);
    assert_eq!(m.recall_at[&1], 0.0);
}

#[test]
fn inductive_setting_scores_only_new_node_links() {
    let (g, split) = stream(600);
    assert!(!split.inductive_nodes.is_empty());
    let touching = split
        .test()
        .filter(|&e| split.is_inductive(g.src(e)) || split.is_inductive(g.dst(e)))
        .count();
    let model = init(small(&g, Method::Stone), 0);
    let opts = EvalOptions {
        setting: Setting::Inductive,
        ..no_ranks()
    };
    let m = evaluate(&model, &g, &split, &opts).unwrap();
    assert_eq!(m.n_eval, touching);
    assert_eq!(m.setting, Setting::Inductive);
}

#[test]
fn stone_learns_a_recency_stream() {
    let g = RecencyStream {
        num_edges: 500,
        ..RecencyStream::default()
    }
    .generate()
    .unwrap();
    let split = chronological_split(&g, DEFAULT_RATIOS).unwrap();
    let model = init(small(&g, Method::Stone), 0);
    let cfg = TrainConfig {
        lr: 1e-3,
        batch_size: 50,
        max_epochs: 50,
        patience: 50,
        ..TrainConfig::default()
    };
    let out = train_link_prediction(&model, &g, &split, &cfg).unwrap();
    let best = out.history.epochs.iter().map(|e| e.train_ap).fold(0.0, f64::max);
    assert!(best >= 0.95, "best training AP {best}");
}

#[test]
fn min_norm_perturbation_fits_labels() {
    let (g, split) = stream(300);
    let model = init(small(&g, Method::Stone), 9);
    let j = link_jacobian(&model, &g, &split, 6, 9).unwrap();
    let c = 0.7;
    let delta = min_norm_perturbation(&j, c).unwrap();
    for i in 0..j.rows {
        let fit: f64 = j.row(i).iter().zip(&delta).map(|(a, b)| a * b).sum();
        assert!((fit - c * j.labels[i]).abs() <= 1e-8, "row {i}: {fit}");
    }
    let norm = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((norm - perturbation_norm(&j, c).unwrap()).abs() <= 1e-8 * norm);
}

#[test]
fn jitter_never_raises_alignment() {
    let (g, split) = stream(300);
    let model = init(small(&g, Method::Rnn), 4);
    let j = link_jacobian(&model, &g, &split, 10, 4).unwrap();
    let mut last = f64::INFINITY;
    for lambda in [0.0, 1e-3, 1e-1, 1.0, 10.0] {
        let f = compute_fla(&j, lambda).unwrap().fla;
        assert!(f <= last * (1.0 + 1e-12), "lambda {lambda}: {f} > {last}");
        last = f;
    }
}
