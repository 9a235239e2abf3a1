mod common;

use common::{instance_away_from_kinks, rng, small_config};
use stgl_core::models::{
    model_finite_difference_grad, model_grad, relative_inf_error, Activation, GradTarget,
    HeadKind, LossKind, Method,
};

const ACTS: [Activation; 3] = [Activation::Relu, Activation::Tanh, Activation::Sigmoid];

fn check(method: Method, layers: usize, head: HeadKind, target: GradTarget, seed: u64) {
    for act in ACTS {
        let cfg = small_config(method, act, layers, head);
        let mut r = rng(seed);
        for trial in 0..5 {
            let (model, input) = instance_away_from_kinks(&cfg, 1e-3, &mut r);
            let g = model_grad(&model, &input, target).unwrap();
            let fd = model_finite_difference_grad(&model, &input, target, 1e-4).unwrap();
            let err = relative_inf_error(&g, &fd);
            assert!(err <= 1e-5, "{method} L={layers} {act:?} {head:?} trial {trial}: {err:e}");
        }
    }
}

#[test]
fn stone_link_and_node() {
    check(Method::Stone, 2, HeadKind::Link, GradTarget::Output, 1);
    check(Method::Stone, 2, HeadKind::Node, GradTarget::Output, 2);
}

#[test]
fn gnn_depths() {
    for l in [2, 3, 4] {
        check(Method::Gnn, l, HeadKind::Link, GradTarget::Output, 3);
        check(Method::Gnn, l, HeadKind::Node, GradTarget::Output, 4);
    }
}

#[test]
fn rnn_lengths() {
    for l in [2, 4] {
        check(Method::Rnn, l, HeadKind::Link, GradTarget::Output, 5);
        check(Method::Rnn, l, HeadKind::Node, GradTarget::Output, 6);
    }
}

#[test]
fn memory_heads() {
    check(Method::Memory, 2, HeadKind::Link, GradTarget::Output, 7);
    check(Method::Memory, 2, HeadKind::Node, GradTarget::Output, 8);
}

#[test]
fn loss_targets() {
    let bce = GradTarget::Loss {
        kind: LossKind::Bce,
        label: 1.0,
    };
    let logistic = GradTarget::Loss {
        kind: LossKind::Logistic,
        label: -1.0,
    };
    check(Method::Stone, 2, HeadKind::Link, bce, 9);
    check(Method::Gnn, 3, HeadKind::Link, logistic, 10);
}

#[test]
fn residual_connections() {
    for method in [Method::Gnn, Method::Rnn] {
        let mut cfg = small_config(method, Activation::Tanh, 4, HeadKind::Node);
        cfg.residual = true;
        let mut r = rng(11);
        for _ in 0..5 {
            let (model, input) = instance_away_from_kinks(&cfg, 1e-3, &mut r);
            let g = model_grad(&model, &input, GradTarget::Output).unwrap();
            let fd = model_finite_difference_grad(&model, &input, GradTarget::Output, 1e-4).unwrap();
            assert!(relative_inf_error(&g, &fd) <= 1e-5);
        }
    }
}
