use serde::{Deserialize, Serialize};

use super::linalg::{cholesky, cholesky_solve, gram, largest_eigenvalue, smallest_eigenvalue};
use crate::error::{Error, Result};
use crate::models::linalg::dot;

/// Per-example gradient rows stacked into an `N x P` matrix with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub data: Vec<f64>,
    pub labels: Vec<f64>,
}

impl JacobianMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || labels.len() != rows {
            return Err(Error::dimension(format!(
                "jacobian {rows}x{cols} with {} entries and {} labels",
                data.len(),
                labels.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("jacobian has non-finite entries".into()));
        }
        Ok(JacobianMatrix {
            rows,
            cols,
            data,
            labels,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, c: f64) -> JacobianMatrix {
        JacobianMatrix {
            data: self.data.iter().map(|x| x * c).collect(),
            ..self.clone()
        }
    }
}

/// Relative jitter levels tried after the caller's own value, as multiples
/// of `trace(K) / N`.
pub const JITTER_LADDER: [f64; 3] = [1e-10, 1e-8, 1e-6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaReport {
    pub fla: f64,
    pub r: f64,
    pub n_sub: usize,
    pub p: usize,
    /// Absolute jitter added to the Gram diagonal.
    pub jitter: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `P > N`.
    pub overparam_ok: bool,
}

/// Solution of `(K + lambda I) v = y` with the jitter actually used.
pub struct GramSolve {
    pub v: Vec<f64>,
    pub jitter: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Factorizes `K + lambda I`, escalating `lambda` up the ladder until the
/// factorization succeeds.
pub fn solve_gram(k: &[f64], n: usize, y: &[f64], jitter: f64) -> Result<GramSolve> {
    if !(jitter >= 0.0) {
        return Err(Error::validation("jitter must be non-negative"));
    }
    let base = (0..n).map(|i| k[i * n + i]).sum::<f64>() / n.max(1) as f64;
    let mut ladder = vec![jitter];
    ladder.extend(JITTER_LADDER.iter().map(|r| r * base).filter(|&l| l > jitter));
    let lambda_max = largest_eigenvalue(k, n, 100);
    let mut last_err = None;
    for lambda in ladder {
        let mut shifted = k.to_vec();
        for i in 0..n {
            shifted[i * n + i] += lambda;
        }
        match cholesky(&shifted, n) {
            Ok(l) => {
                if lambda > jitter {
                    log::warn!("gram matrix needed jitter {lambda:e} to factorize");
                }
                let v = cholesky_solve(&l, n, y);
                let lambda_min = smallest_eigenvalue(&l, n, lambda, 100);
                return Ok(GramSolve {
                    v,
                    jitter: lambda,
                    lambda_min,
                    lambda_max,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    let min_diag = (0..n).map(|i| k[i * n + i]).fold(f64::INFINITY, f64::min);
    Err(Error::Numerical(format!(
        "gram factorization failed at maximum jitter ({}); trace/N = {base:e}, \
         largest eigenvalue ~ {lambda_max:e}, smallest diagonal = {min_diag:e}",
        last_err.map_or_else(String::new, |e| e.to_string())
    )))
}

/// `y^T (J J^T + lambda I)^{-1} y`.
pub fn compute_fla(j: &JacobianMatrix, jitter: f64) -> Result<FlaReport> {
    let n = j.rows;
    if n == 0 {
        return Err(Error::validation("jacobian has no rows"));
    }
    if j.cols <= n {
        log::warn!("P = {} is not larger than N = {n}; not over-parameterized", j.cols);
    }
    let k = gram(&j.data, n, j.cols);
    let s = solve_gram(&k, n, &j.labels, jitter)?;
    let fla = dot(&j.labels, &s.v).max(0.0);
    Ok(FlaReport {
        fla,
        r: fla.sqrt(),
        n_sub: n,
        p: j.cols,
        jitter: s.jitter,
        lambda_min: s.lambda_min,
        lambda_max: s.lambda_max,
        overparam_ok: j.cols > n,
    })
}

/// Norm of the smallest `dtheta` with `J dtheta = c y`, i.e. `c sqrt(fla)`.
pub fn perturbation_norm(j: &JacobianMatrix, c: f64) -> Result<f64> {
    Ok(c * compute_fla(j, 0.0)?.r)
}

/// The minimum-norm solution `J^T (J J^T)^{-1} c y` itself.
pub fn min_norm_perturbation(j: &JacobianMatrix, c: f64) -> Result<Vec<f64>> {
    let n = j.rows;
    let k = gram(&j.data, n, j.cols);
    let cy: Vec<f64> = j.labels.iter().map(|y| c * y).collect();
    let s = solve_gram(&k, n, &cy, 0.0)?;
    let mut out = vec![0.0; j.cols];
    for (i, vi) in s.v.iter().enumerate() {
        for (o, x) in out.iter_mut().zip(j.row(i)) {
            *o += vi * x;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_jacobian() {
        let j = JacobianMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![1.0, -1.0]).unwrap();
        let r = compute_fla(&j, 0.0).unwrap();
        assert!((r.fla - 2.0).abs() < 1e-14);
        assert_eq!(r.jitter, 0.0);
        assert!(!r.overparam_ok);
        assert!((perturbation_norm(&j, 2.0).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn diagonal_jacobian() {
        let j = JacobianMatrix::new(2, 2, vec![2.0, 0.0, 0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!((compute_fla(&j, 0.0).unwrap().fla - 1.25).abs() < 1e-14);
    }

    #[test]
    fn zero_labels() {
        let j = JacobianMatrix::new(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(compute_fla(&j, 0.0).unwrap().fla, 0.0);
    }

    #[test]
    fn rank_deficient_gram_escalates_jitter() {
        // two identical rows: K is singular
        let j = JacobianMatrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0], vec![1.0, -1.0]).unwrap();
        let r = compute_fla(&j, 0.0).unwrap();
        assert!(r.jitter > 0.0);
        assert!(r.fla.is_finite());
    }
}
