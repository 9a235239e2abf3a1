//! Dense symmetric kernels for Gram solves.

use crate::error::{Error, Result};
use crate::models::linalg::dot;

/// `J J^T` for a row-major `n x p` matrix.
pub fn gram(j: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut k = vec![0.0; n * n];
    for a in 0..n {
        let ra = &j[a * p..(a + 1) * p];
        for b in a..n {
            let v = dot(ra, &j[b * p..(b + 1) * p]);
            k[a * n + b] = v;
            k[b * n + a] = v;
        }
    }
    k
}

/// Lower Cholesky factor of an `n x n` symmetric matrix, or an error when it
/// is not numerically positive definite. Pivots below `n eps max_diag` count
/// as zero.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
    let tol = n as f64 * f64::EPSILON * max_diag;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                if !(s > tol) || !s.is_finite() {
                    return Err(Error::Numerical(format!(
                        "matrix is not positive definite (pivot {i} = {s:e})"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b`.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - dot(&l[i * n..i * n + i], &y[..i])) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn sym_matvec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| dot(&a[i * n..(i + 1) * n], x)).collect()
}

fn start_vector(n: usize) -> Vec<f64> {
    // deterministic, not orthogonal to any coordinate axis
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0).collect();
    normalize(&mut v);
    v
}

/// Largest eigenvalue estimate by power iteration.
pub fn largest_eigenvalue(a: &[f64], n: usize, iters: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut v = start_vector(n);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let mut w = sym_matvec(a, n, &v);
        lambda = dot(&v, &w);
        if normalize(&mut w) == 0.0 {
            return 0.0;
        }
        v = w;
    }
    lambda
}

/// Smallest eigenvalue of `A` estimated by inverse iteration on a Cholesky
/// factor of `A + shift I`.
pub fn smallest_eigenvalue(l: &[f64], n: usize, shift: f64, iters: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut v = start_vector(n);
    let mut mu = 0.0;
    for _ in 0..iters {
        let mut w = cholesky_solve(l, n, &v);
        mu = dot(&v, &w);
        normalize(&mut w);
        v = w;
    }
    1.0 / mu - shift
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        let x = cholesky_solve(&l, 2, &[2.0, 1.0]);
        // 4x + 2y = 2, 2x + 3y = 1 -> x = 0.5, y = 0
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn indefinite_rejected() {
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
        assert!(cholesky(&[0.0], 1).is_err());
    }

    #[test]
    fn eigen_estimates_on_diagonal() {
        let a = [5.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.5];
        assert!((largest_eigenvalue(&a, 3, 200) - 5.0).abs() < 1e-9);
        let l = cholesky(&a, 3).unwrap();
        assert!((smallest_eigenvalue(&l, 3, 0.0, 200) - 0.5).abs() < 1e-9);
    }
}
