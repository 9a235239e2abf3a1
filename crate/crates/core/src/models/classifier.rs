use super::linalg::{dot, matvec_new, matvec_t_add, outer_add};

/// Two-layer perceptron on `[h_i | h_j]`: `V2 relu(V1 x + b1) + b2`.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierView<'a> {
    /// `d_mlp x 2 d_h`.
    pub v1: &'a [f64],
    pub b1: &'a [f64],
    pub v2: &'a [f64],
    pub b2: f64,
    pub d_h: usize,
    pub d_mlp: usize,
}

#[derive(Debug, Clone)]
pub struct ClassifierCache {
    x: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
}

impl ClassifierCache {
    pub fn min_abs_preactivation(&self) -> f64 {
        self.pre.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }
}

pub fn link_score(c: &ClassifierView<'_>, hi: &[f64], hj: &[f64]) -> (f64, ClassifierCache) {
    debug_assert_eq!(hi.len(), c.d_h);
    debug_assert_eq!(hj.len(), c.d_h);
    let mut x = Vec::with_capacity(2 * c.d_h);
    x.extend_from_slice(hi);
    x.extend_from_slice(hj);
    let mut pre = matvec_new(c.v1, c.d_mlp, 2 * c.d_h, &x);
    for (p, b) in pre.iter_mut().zip(c.b1) {
        *p += b;
    }
    let hidden: Vec<f64> = pre.iter().map(|p| p.max(0.0)).collect();
    let out = dot(c.v2, &hidden) + c.b2;
    (out, ClassifierCache { x, pre, hidden })
}

pub struct ClassifierGrads<'a> {
    pub v1: &'a mut [f64],
    pub b1: &'a mut [f64],
    pub v2: &'a mut [f64],
    pub b2: &'a mut f64,
}

/// Accumulates parameter gradients and returns `(d h_i, d h_j)`.
pub fn backward(
    c: &ClassifierView<'_>,
    cache: &ClassifierCache,
    dout: f64,
    g: ClassifierGrads<'_>,
) -> (Vec<f64>, Vec<f64>) {
    for (gv, h) in g.v2.iter_mut().zip(&cache.hidden) {
        *gv += dout * h;
    }
    *g.b2 += dout;
    let dpre: Vec<f64> = c
        .v2
        .iter()
        .zip(&cache.pre)
        .map(|(v, p)| if *p > 0.0 { dout * v } else { 0.0 })
        .collect();
    outer_add(g.v1, &dpre, &cache.x);
    for (gb, d) in g.b1.iter_mut().zip(&dpre) {
        *gb += d;
    }
    let mut dx = vec![0.0; 2 * c.d_h];
    matvec_t_add(c.v1, c.d_mlp, 2 * c.d_h, &dpre, &mut dx);
    let dj = dx.split_off(c.d_h);
    (dx, dj)
}
