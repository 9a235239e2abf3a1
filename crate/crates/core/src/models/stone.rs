//! The single-layer encoder:
//! `z = act(W1 sum_k alpha_k u_k) + sum_k u_k`, `h = W2 LayerNorm(z)`.

use super::activation::Activation;
use super::features::EventFeatures;
use super::linalg::{axpy, dot, matvec_new, matvec_t_add, outer_add};
use crate::error::{Error, Result};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Borrowed encoder weights. `w1` is `d_in x d_in`, `w2` is `d_out x d_in`.
#[derive(Debug, Clone, Copy)]
pub struct StoneView<'a> {
    pub alpha: &'a [f64],
    pub w1: &'a [f64],
    pub w2: &'a [f64],
    pub d_in: usize,
    pub d_out: usize,
    pub act: Activation,
}

#[derive(Debug, Clone)]
pub struct StoneCache {
    ubar: Vec<f64>,
    pre: Vec<f64>,
    normed: Vec<f64>,
    inv_std: f64,
    used: usize,
}

impl StoneCache {
    pub fn min_abs_preactivation(&self) -> f64 {
        self.pre.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }
}

/// LayerNorm without affine terms. Returns the normalized vector and
/// `1/sqrt(var + eps)`; an all-zero input maps to all zeros.
pub fn layer_norm(z: &[f64]) -> (Vec<f64>, f64) {
    let n = z.len() as f64;
    if z.is_empty() {
        return (Vec::new(), 0.0);
    }
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    (z.iter().map(|x| (x - mean) * inv_std).collect(), inv_std)
}

pub fn layer_norm_backward(normed: &[f64], inv_std: f64, dy: &[f64]) -> Vec<f64> {
    let n = normed.len() as f64;
    let mean_dy = dy.iter().sum::<f64>() / n;
    let mean_dy_y = dot(dy, normed) / n;
    dy.iter()
        .zip(normed)
        .map(|(g, y)| inv_std * (g - mean_dy - y * mean_dy_y))
        .collect()
}

pub fn forward(p: &StoneView<'_>, h: &EventFeatures) -> Result<(Vec<f64>, StoneCache)> {
    let k = p.alpha.len();
    if h.len() > k {
        return Err(Error::dimension(format!(
            "{} events exceed the encoder's K = {k}",
            h.len()
        )));
    }
    if !h.is_empty() && h.dim() != p.d_in {
        return Err(Error::dimension(format!(
            "event dimension {} does not match d_in = {}",
            h.dim(),
            p.d_in
        )));
    }
    let mut ubar = vec![0.0; p.d_in];
    let mut usum = vec![0.0; p.d_in];
    for (a, u) in p.alpha.iter().zip(h.rows()) {
        axpy(*a, u, &mut ubar);
        axpy(1.0, u, &mut usum);
    }
    let pre = matvec_new(p.w1, p.d_in, p.d_in, &ubar);
    let z: Vec<f64> = pre.iter().zip(&usum).map(|(a, r)| p.act.apply(*a) + r).collect();
    let (normed, inv_std) = layer_norm(&z);
    let out = matvec_new(p.w2, p.d_out, p.d_in, &normed);
    Ok((
        out,
        StoneCache {
            ubar,
            pre,
            normed,
            inv_std,
            used: h.len(),
        },
    ))
}

/// Accumulates gradients into `g_alpha`, `g_w1`, `g_w2` (any may be `None`
/// when that block is frozen).
pub fn backward(
    p: &StoneView<'_>,
    h: &EventFeatures,
    cache: &StoneCache,
    dout: &[f64],
    g_alpha: Option<&mut [f64]>,
    g_w1: &mut [f64],
    g_w2: &mut [f64],
) {
    outer_add(g_w2, dout, &cache.normed);
    let mut dnormed = vec![0.0; p.d_in];
    matvec_t_add(p.w2, p.d_out, p.d_in, dout, &mut dnormed);
    let dz = layer_norm_backward(&cache.normed, cache.inv_std, &dnormed);
    let dpre: Vec<f64> = dz
        .iter()
        .zip(&cache.pre)
        .map(|(g, a)| g * p.act.derivative(*a))
        .collect();
    outer_add(g_w1, &dpre, &cache.ubar);
    if let Some(g_alpha) = g_alpha {
        let mut dubar = vec![0.0; p.d_in];
        matvec_t_add(p.w1, p.d_in, p.d_in, &dpre, &mut dubar);
        for (k, u) in h.rows().take(cache.used).enumerate() {
            g_alpha[k] += dot(u, &dubar);
        }
    }
}
