//! Multi-step recurrent encoder:
//! `h_l = act(kappa (W1 h_{l-1} + W2 W0 v_l)) + alpha h_{l-1}`, `h_0 = 0`,
//! with `kappa = 1/sqrt(2)` and a frozen input projection `W0`.

use std::f64::consts::FRAC_1_SQRT_2;

use super::activation::Activation;
use super::features::EventFeatures;
use super::linalg::{axpy, matvec, matvec_new, matvec_t_add, outer_add};
use crate::error::{Error, Result};

pub const RNN_KAPPA: f64 = FRAC_1_SQRT_2;

/// `w0` is `m x d` (frozen), `w1` and `w2` are `m x m`.
#[derive(Debug, Clone, Copy)]
pub struct RnnView<'a> {
    pub w0: &'a [f64],
    pub w1: &'a [f64],
    pub w2: &'a [f64],
    pub d: usize,
    pub m: usize,
    pub steps: usize,
    pub residual: f64,
    pub act: Activation,
}

#[derive(Debug, Clone)]
pub struct RnnCache {
    /// `h_0 .. h_T`.
    hs: Vec<Vec<f64>>,
    xs: Vec<Vec<f64>>,
    pres: Vec<Vec<f64>>,
    /// How many leading steps were zero padding.
    pub padded: usize,
}

impl RnnCache {
    pub fn min_abs_preactivation(&self) -> f64 {
        self.pres
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }
}

/// `events` is newest first, as built from a neighborhood. The `steps` most
/// recent rows are fed oldest to newest; missing steps are zero events at the
/// front of the sequence.
pub fn forward(p: &RnnView<'_>, events: &EventFeatures) -> Result<(Vec<f64>, RnnCache)> {
    if p.steps == 0 {
        return Err(Error::validation("recurrent encoder needs at least one step"));
    }
    if !events.is_empty() && events.dim() != p.d {
        return Err(Error::dimension(format!(
            "event dimension {} does not match d = {}",
            events.dim(),
            p.d
        )));
    }
    let have = events.len().min(p.steps);
    let padded = p.steps - have;
    let mut hs = vec![vec![0.0; p.m]];
    let mut xs = Vec::with_capacity(p.steps);
    let mut pres = Vec::with_capacity(p.steps);
    for step in 0..p.steps {
        let x = if step < padded {
            vec![0.0; p.m]
        } else {
            // oldest of the kept rows is at index have-1
            let row = events.row(have - 1 - (step - padded));
            matvec_new(p.w0, p.m, p.d, row)
        };
        let prev = hs.last().unwrap();
        let mut pre = vec![0.0; p.m];
        matvec(p.w1, p.m, p.m, prev, &mut pre);
        let wx = matvec_new(p.w2, p.m, p.m, &x);
        for (a, b) in pre.iter_mut().zip(&wx) {
            *a = RNN_KAPPA * (*a + b);
        }
        let mut h: Vec<f64> = pre.iter().map(|a| p.act.apply(*a)).collect();
        axpy(p.residual, prev, &mut h);
        hs.push(h);
        xs.push(x);
        pres.push(pre);
    }
    Ok((
        hs.last().unwrap().clone(),
        RnnCache {
            hs,
            xs,
            pres,
            padded,
        },
    ))
}

pub fn backward(p: &RnnView<'_>, cache: &RnnCache, dout: &[f64], g_w1: &mut [f64], g_w2: &mut [f64]) {
    let mut dh = dout.to_vec();
    for step in (0..p.steps).rev() {
        let g: Vec<f64> = dh
            .iter()
            .zip(&cache.pres[step])
            .map(|(d, a)| RNN_KAPPA * d * p.act.derivative(*a))
            .collect();
        outer_add(g_w1, &g, &cache.hs[step]);
        outer_add(g_w2, &g, &cache.xs[step]);
        let mut prev = vec![0.0; p.m];
        matvec_t_add(p.w1, p.m, p.m, &g, &mut prev);
        axpy(p.residual, &dh, &mut prev);
        dh = prev;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_unrolls() {
        let w0 = [1.0, 2.0, -1.0, 0.5]; // 2x2
        let w1 = [0.3, 0.1, -0.2, 0.4];
        let w2 = [0.7, -0.6, 0.2, 0.9];
        let p = RnnView {
            w0: &w0,
            w1: &w1,
            w2: &w2,
            d: 2,
            m: 2,
            steps: 1,
            residual: 0.0,
            act: Activation::Tanh,
        };
        let v = [0.4, -0.3];
        let (h, _) = forward(&p, &EventFeatures::from_rows(2, &[v.to_vec()]).unwrap()).unwrap();
        let x = [0.4 - 0.6, -0.4 - 0.15];
        let want = [
            (RNN_KAPPA * (0.7 * x[0] - 0.6 * x[1])).tanh(),
            (RNN_KAPPA * (0.2 * x[0] + 0.9 * x[1])).tanh(),
        ];
        assert!((h[0] - want[0]).abs() < 1e-15 && (h[1] - want[1]).abs() < 1e-15);
    }

    #[test]
    fn zero_events_stay_zero_under_tanh() {
        let w = [0.5; 9];
        let p = RnnView {
            w0: &w,
            w1: &w,
            w2: &w,
            d: 3,
            m: 3,
            steps: 3,
            residual: 0.0,
            act: Activation::Tanh,
        };
        let ev = EventFeatures::from_rows(3, &[vec![0.0; 3], vec![0.0; 3]]).unwrap();
        let (h, cache) = forward(&p, &ev).unwrap();
        assert_eq!(h, vec![0.0; 3]);
        assert_eq!(cache.padded, 1);
    }
}
