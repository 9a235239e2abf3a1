//! Mean-aggregation message passing over a sampled temporal tree:
//! `h^(1)_v = act(W1 mean_c x_c)`,
//! `h^(l)_v = act(W^l mean_c h^(l-1)_c) + alpha h^(l-1)_v`.
//!
//! A tree of depth `L-1` yields `h^(L-1)` at the root.

use super::activation::Activation;
use super::features::FeatureTree;
use super::linalg::{axpy, matvec_new, matvec_t_add, outer_add};
use crate::error::{Error, Result};

/// `weights[0]` is `m x d`, the rest `m x m`.
#[derive(Debug, Clone)]
pub struct GnnView<'a> {
    pub weights: Vec<&'a [f64]>,
    pub d: usize,
    pub m: usize,
    pub residual: f64,
    pub act: Activation,
}

impl GnnView<'_> {
    /// Number of message-passing layers, i.e. `L - 1`.
    pub fn depth(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Debug, Clone)]
pub struct GnnCache {
    /// Per layer `l` (0-based), per vertex: `(agg, pre, h)` for vertices that
    /// compute that layer.
    layers: Vec<Vec<Option<LayerState>>>,
}

#[derive(Debug, Clone)]
struct LayerState {
    agg: Vec<f64>,
    pre: Vec<f64>,
    h: Vec<f64>,
}

impl GnnCache {
    pub fn min_abs_preactivation(&self) -> f64 {
        self.layers
            .iter()
            .flatten()
            .flatten()
            .flat_map(|s| s.pre.iter())
            .fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }
}

fn in_dim(p: &GnnView<'_>, layer: usize) -> usize {
    if layer == 0 {
        p.d
    } else {
        p.m
    }
}

pub fn forward(p: &GnnView<'_>, tree: &FeatureTree) -> Result<(Vec<f64>, GnnCache)> {
    let depth = p.depth();
    if depth == 0 {
        return Err(Error::validation("message passing needs at least two layers"));
    }
    if tree.is_empty() || tree.parent[0].is_some() {
        return Err(Error::validation("tree must start at its root"));
    }
    if tree.len() > 1 && tree.dim != p.d {
        return Err(Error::dimension(format!(
            "tree features have dimension {}, expected {}",
            tree.dim, p.d
        )));
    }
    let n = tree.len();
    let mut layers: Vec<Vec<Option<LayerState>>> = Vec::with_capacity(depth);
    for l in 0..depth {
        let din = in_dim(p, l);
        let mut states = vec![None; n];
        for v in 0..n {
            if tree.depth[v] + l + 1 > depth {
                continue;
            }
            let mut agg = vec![0.0; din];
            let kids = &tree.children[v];
            if !kids.is_empty() {
                let w = 1.0 / kids.len() as f64;
                for &c in kids {
                    let src = if l == 0 {
                        tree.feat(c)
                    } else {
                        &layers[l - 1][c].as_ref().expect("child computed").h
                    };
                    axpy(w, src, &mut agg);
                }
            }
            let pre = matvec_new(p.weights[l], p.m, din, &agg);
            let mut h: Vec<f64> = pre.iter().map(|a| p.act.apply(*a)).collect();
            if l > 0 && p.residual != 0.0 {
                let prev = &layers[l - 1][v].as_ref().expect("self computed").h;
                axpy(p.residual, prev, &mut h);
            }
            states[v] = Some(LayerState { agg, pre, h });
        }
        layers.push(states);
    }
    let out = layers[depth - 1][0].as_ref().expect("root computed").h.clone();
    Ok((out, GnnCache { layers }))
}

/// `grads[l]` receives the gradient of layer `l`'s weight matrix.
pub fn backward(
    p: &GnnView<'_>,
    tree: &FeatureTree,
    cache: &GnnCache,
    dout: &[f64],
    grads: &mut [&mut [f64]],
) {
    let depth = p.depth();
    let n = cache.layers[0].len();
    let mut dh: Vec<Option<Vec<f64>>> = vec![None; n];
    dh[0] = Some(dout.to_vec());
    for l in (0..depth).rev() {
        let din = in_dim(p, l);
        let mut below: Vec<Option<Vec<f64>>> = vec![None; n];
        for v in 0..n {
            let (Some(g), Some(st)) = (dh[v].take(), cache.layers[l][v].as_ref()) else {
                continue;
            };
            let dpre: Vec<f64> = g
                .iter()
                .zip(&st.pre)
                .map(|(x, a)| x * p.act.derivative(*a))
                .collect();
            outer_add(grads[l], &dpre, &st.agg);
            if l == 0 {
                continue;
            }
            if p.residual != 0.0 {
                let slot = below[v].get_or_insert_with(|| vec![0.0; p.m]);
                axpy(p.residual, &g, slot);
            }
            let kids = &tree.children[v];
            if kids.is_empty() {
                continue;
            }
            let mut dagg = vec![0.0; din];
            matvec_t_add(p.weights[l], p.m, din, &dpre, &mut dagg);
            let w = 1.0 / kids.len() as f64;
            for &c in kids {
                let slot = below[c].get_or_insert_with(|| vec![0.0; p.m]);
                axpy(w, &dagg, slot);
            }
        }
        dh = below;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_layer_single_neighbor() {
        let w1 = [0.5, -1.0, 2.0, 0.25]; // 2x2
        let p = GnnView {
            weights: vec![&w1],
            d: 2,
            m: 2,
            residual: 0.0,
            act: Activation::Tanh,
        };
        let x = vec![0.3, 0.7];
        let (h, _) = forward(&p, &FeatureTree::star(2, &[x.clone()])).unwrap();
        let want = [(0.5 * 0.3 - 0.7f64).tanh(), (2.0 * 0.3 + 0.25 * 0.7f64).tanh()];
        assert!((h[0] - want[0]).abs() < 1e-15 && (h[1] - want[1]).abs() < 1e-15);
    }

    #[test]
    fn duplicate_neighbors_do_not_change_mean() {
        let w1 = [0.5, -1.0, 2.0, 0.25, 1.0, 1.0];
        let p = GnnView {
            weights: vec![&w1],
            d: 2,
            m: 3,
            residual: 0.0,
            act: Activation::Relu,
        };
        let x = vec![0.3, -0.7];
        let one = forward(&p, &FeatureTree::star(2, &[x.clone()])).unwrap().0;
        let two = forward(&p, &FeatureTree::star(2, &[x.clone(), x])).unwrap().0;
        assert_eq!(one, two);
    }

    #[test]
    fn childless_root_aggregates_zero() {
        let w1 = [1.0, 1.0];
        let p = GnnView {
            weights: vec![&w1],
            d: 2,
            m: 1,
            residual: 0.0,
            act: Activation::Sigmoid,
        };
        let (h, _) = forward(&p, &FeatureTree::star(2, &[])).unwrap();
        assert_eq!(h, vec![0.5]);
    }
}
