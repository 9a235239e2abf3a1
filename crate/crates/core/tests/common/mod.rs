#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use stgl_core::graph::{Interaction, NodeFeatures, TemporalGraph};
use stgl_core::models::{
    Activation, EventFeatures, FeatureLayout, FeatureTree, HeadKind, MemoryInput, MemoryUpdate,
    Method, Model, ModelConfig, ModelInput, NodeInput,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_config(method: Method, act: Activation, layers: usize, head: HeadKind) -> ModelConfig {
    let mut cfg = ModelConfig::new(
        method,
        FeatureLayout {
            d_e: 2,
            d_t: 3,
            d_n: 1,
        },
    );
    cfg.hidden = 5;
    cfg.mlp_hidden = 4;
    cfg.k = 4;
    cfg.layers = layers;
    cfg.activation = act;
    cfg.head = head;
    cfg
}

fn random_vec<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, 0.6).unwrap();
    (0..n).map(|_| normal.sample(rng)).collect()
}

pub fn random_node_input<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> NodeInput {
    let d = cfg.d_in();
    match cfg.method {
        Method::Stone | Method::Rnn => {
            let max = if cfg.method == Method::Stone { cfg.k } else { cfg.layers + 1 };
            let n = rng.random_range(1..=max);
            let rows: Vec<Vec<f64>> = (0..n).map(|_| random_vec(d, rng)).collect();
            NodeInput::Events(EventFeatures::from_rows(d, &rows).unwrap())
        }
        Method::Gnn => {
            let mut tree = FeatureTree::star(d, &[]);
            let mut frontier = vec![0usize];
            for _ in 0..cfg.layers - 1 {
                let mut next = Vec::new();
                for &p in &frontier {
                    for _ in 0..rng.random_range(1..=3) {
                        next.push(tree.add_child(p, &random_vec(d, rng)));
                    }
                }
                frontier = next;
            }
            NodeInput::Tree(tree)
        }
        Method::Memory => {
            let m = cfg.hidden;
            NodeInput::Memory(MemoryInput {
                current: random_vec(m, rng),
                last: Some(MemoryUpdate {
                    self_prev: random_vec(m, rng),
                    other_prev: random_vec(m, rng),
                    msg: random_vec(cfg.d_msg(), rng),
                }),
            })
        }
    }
}

pub fn random_input<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> ModelInput {
    match cfg.head {
        HeadKind::Node => ModelInput::Node(random_node_input(cfg, rng)),
        HeadKind::Link => ModelInput::Link(random_node_input(cfg, rng), random_node_input(cfg, rng)),
    }
}

/// Draws model/input pairs until every pre-activation is at least `margin`
/// away from zero.
pub fn instance_away_from_kinks<R: Rng>(cfg: &ModelConfig, margin: f64, rng: &mut R) -> (Model, ModelInput) {
    loop {
        let model = Model::init(cfg.clone(), rng).unwrap();
        let input = random_input(cfg, rng);
        let (_, cache) = model.forward_with(model.theta(), &input).unwrap();
        if cache.kink_margin() >= margin {
            return (model, input);
        }
    }
}

/// Random multigraph with `n` nodes and `e` interactions at random times.
pub fn random_graph<R: Rng>(n: u32, e: usize, rng: &mut R) -> TemporalGraph {
    let rows = (0..e)
        .map(|_| {
            let s = rng.random_range(0..n);
            let mut d = rng.random_range(0..n);
            if d == s {
                d = (d + 1) % n;
            }
            Interaction::new(s, d, rng.random_range(0..(e as u32 / 2).max(1)) as f64)
        })
        .collect();
    TemporalGraph::from_interactions(rows, NodeFeatures::default(), Some(n as usize)).unwrap()
}
