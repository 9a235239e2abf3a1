use serde::{Deserialize, Serialize};

use super::activation::{sigmoid, softplus};
use super::model::{Model, ModelInput};
use crate::error::{Error, Result};

/// `Logistic` is `log(1 + exp(-y f))` with `y` in {-1, +1}; `Bce` is binary
/// cross-entropy on a logit with `y` in {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Logistic,
    Bce,
}

fn check_label(kind: LossKind, y: f64) -> Result<()> {
    let ok = match kind {
        LossKind::Logistic => y == 1.0 || y == -1.0,
        LossKind::Bce => y == 0.0 || y == 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::validation(format!("label {y} is invalid for {kind:?} loss")))
    }
}

pub fn loss_value(kind: LossKind, f: f64, y: f64) -> Result<f64> {
    check_label(kind, y)?;
    Ok(match kind {
        LossKind::Logistic => softplus(-y * f),
        LossKind::Bce => softplus(f) - y * f,
    })
}

/// `d loss / d f`.
pub fn loss_derivative(kind: LossKind, f: f64, y: f64) -> Result<f64> {
    check_label(kind, y)?;
    Ok(match kind {
        LossKind::Logistic => -y * sigmoid(-y * f),
        LossKind::Bce => sigmoid(f) - y,
    })
}

/// Selects what [`model_grad`] differentiates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradTarget {
    Output,
    Loss { kind: LossKind, label: f64 },
}

impl GradTarget {
    fn apply(&self, f: f64) -> Result<f64> {
        match *self {
            GradTarget::Output => Ok(f),
            GradTarget::Loss { kind, label } => loss_value(kind, f, label),
        }
    }
}

/// Hand-derived gradient of the selected target over all trainable
/// parameters, in the model's flattening order.
pub fn model_grad(model: &Model, input: &ModelInput, target: GradTarget) -> Result<Vec<f64>> {
    model_grad_at(model, model.theta(), input, target)
}

pub fn model_grad_at(
    model: &Model,
    theta: &[f64],
    input: &ModelInput,
    target: GradTarget,
) -> Result<Vec<f64>> {
    let (f, cache) = model.forward_with(theta, input)?;
    let dout = match target {
        GradTarget::Output => 1.0,
        GradTarget::Loss { kind, label } => loss_derivative(kind, f, label)?,
    };
    let mut grad = vec![0.0; theta.len()];
    model.backward_with(theta, input, &cache, dout, &mut grad)?;
    Ok(grad)
}

/// Central differences of `f` at `theta`, one coordinate at a time.
pub fn finite_difference_grad<F>(f: F, theta: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::validation("finite-difference step must be positive"));
    }
    let mut work = theta.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + eps;
        let hi = f(&work)?;
        work[i] = orig - eps;
        let lo = f(&work)?;
        work[i] = orig;
        out.push((hi - lo) / (2.0 * eps));
    }
    Ok(out)
}

pub fn model_finite_difference_grad(
    model: &Model,
    input: &ModelInput,
    target: GradTarget,
    eps: f64,
) -> Result<Vec<f64>> {
    finite_difference_grad(
        |theta| target.apply(model.output_with(theta, input)?),
        model.theta(),
        eps,
    )
}

/// `max|a - b| / (1 + max|b|)`.
pub fn relative_inf_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    diff / (1.0 + scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_model_gradient_is_input() {
        let x = [0.5, -2.0, 3.25];
        let f = |w: &[f64]| Ok(w.iter().zip(&x).map(|(a, b)| a * b).sum());
        let g = finite_difference_grad(f, &[0.1, 0.2, 0.3], 1e-3).unwrap();
        for (gi, xi) in g.iter().zip(x) {
            assert!((gi - xi).abs() < 1e-10);
        }
    }

    #[test]
    fn halving_step_quarters_error() {
        let f = |w: &[f64]| Ok(w[0].sin() * w[0].exp());
        let exact = 0.7f64.cos() * 0.7f64.exp() + 0.7f64.sin() * 0.7f64.exp();
        let e1 = (finite_difference_grad(f, &[0.7], 1e-2).unwrap()[0] - exact).abs();
        let e2 = (finite_difference_grad(f, &[0.7], 5e-3).unwrap()[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn logistic_derivative_at_zero() {
        assert_eq!(loss_derivative(LossKind::Logistic, 0.0, 1.0).unwrap(), -0.5);
        assert!((loss_value(LossKind::Logistic, 0.0, -1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(loss_value(LossKind::Logistic, 0.0, 0.0).is_err());
        assert!(loss_value(LossKind::Bce, 0.0, -1.0).is_err());
    }
}
