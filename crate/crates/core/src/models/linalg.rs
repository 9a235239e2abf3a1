//! Row-major dense kernels used by the hand-written forward/backward passes.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out = A x` for a `rows x cols` matrix.
pub fn matvec(a: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    for (o, row) in out.iter_mut().zip(a.chunks_exact(cols.max(1))).take(rows) {
        *o = dot(row, x);
    }
    if cols == 0 {
        out[..rows].iter_mut().for_each(|o| *o = 0.0);
    }
}

pub fn matvec_new(a: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows];
    matvec(a, rows, cols, x, &mut out);
    out
}

/// `out += A^T g`.
pub fn matvec_t_add(a: &[f64], rows: usize, cols: usize, g: &[f64], out: &mut [f64]) {
    debug_assert_eq!(g.len(), rows);
    debug_assert_eq!(out.len(), cols);
    if cols == 0 {
        return;
    }
    for (row, &gi) in a.chunks_exact(cols).zip(g) {
        if gi == 0.0 {
            continue;
        }
        for (o, &w) in out.iter_mut().zip(row) {
            *o += gi * w;
        }
    }
}

/// `grad += g x^T` for a `g.len() x x.len()` block.
pub fn outer_add(grad: &mut [f64], g: &[f64], x: &[f64]) {
    let cols = x.len();
    if cols == 0 {
        return;
    }
    for (row, &gi) in grad.chunks_exact_mut(cols).zip(g) {
        if gi == 0.0 {
            continue;
        }
        for (o, &xj) in row.iter_mut().zip(x) {
            *o += gi * xj;
        }
    }
}

/// `y += a x`.
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
