//! Online SGD: one labeled example per iteration, logistic loss, and a
//! parameter vector drawn uniformly from the trajectory at the end.

use rand::Rng;

use super::negatives::NegativeSampler;
use crate::error::{Error, Result};
use crate::graph::{SplitSpec, TemporalGraph};
use crate::models::{link_input, loss_derivative, LossKind, Method, Model, ModelInput};
use crate::rng::{stream_rng, Stream};

/// Anything with a flat parameter vector and a scalar output gradient.
pub trait Differentiable {
    type Input;

    fn params(&self) -> &[f64];

    fn params_mut(&mut self) -> &mut [f64];

    fn output_and_grad(&self, input: &Self::Input) -> Result<(f64, Vec<f64>)>;
}

impl Differentiable for Model {
    type Input = ModelInput;

    fn params(&self) -> &[f64] {
        self.theta()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.theta_mut()
    }

    fn output_and_grad(&self, input: &ModelInput) -> Result<(f64, Vec<f64>)> {
        Model::output_and_grad(self, input)
    }
}

/// `f(x) = w . x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
}

impl Differentiable for LinearModel {
    type Input = Vec<f64>;

    fn params(&self) -> &[f64] {
        &self.w
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }

    fn output_and_grad(&self, x: &Vec<f64>) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.w.len() {
            return Err(Error::dimension("input and weight lengths differ"));
        }
        Ok((self.w.iter().zip(x).map(|(a, b)| a * b).sum(), x.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineSgdResult {
    /// `theta_0 .. theta_{N-1}`: the parameters each iteration started from.
    pub trajectory: Vec<Vec<f64>>,
    /// Parameters after the last update.
    pub last: Vec<f64>,
    /// Index into `trajectory` of the returned parameters.
    pub selected: usize,
    pub losses: Vec<f64>,
    pub grad_evals: usize,
}

impl OnlineSgdResult {
    pub fn theta_tilde(&self) -> &[f64] {
        &self.trajectory[self.selected]
    }
}

fn check_pm1(y: f64) -> Result<()> {
    if y == 1.0 || y == -1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("online SGD needs labels in {{-1, +1}}, got {y}")))
    }
}

/// One logistic-loss step. Returns the loss before the step.
fn sgd_step<D: Differentiable>(model: &mut D, x: &D::Input, y: f64, eta: f64) -> Result<f64> {
    check_pm1(y)?;
    let (f, grad) = model.output_and_grad(x)?;
    let dl = loss_derivative(LossKind::Logistic, f, y)?;
    for (p, g) in model.params_mut().iter_mut().zip(&grad) {
        *p -= eta * dl * g;
    }
    crate::models::loss_value(LossKind::Logistic, f, y)
}

/// Runs exactly `n` iterations over `stream` and leaves `model` at the
/// selected trajectory point.
pub fn online_sgd<D, I, R>(model: &mut D, stream: I, eta: f64, n: usize, rng: &mut R) -> Result<OnlineSgdResult>
where
    D: Differentiable,
    I: IntoIterator<Item = (D::Input, f64)>,
    R: Rng + ?Sized,
{
    if n == 0 {
        return Err(Error::validation("online SGD needs N >= 1"));
    }
    let mut trajectory = Vec::with_capacity(n);
    let mut losses = Vec::with_capacity(n);
    let mut it = stream.into_iter();
    for _ in 0..n {
        let (x, y) = it
            .next()
            .ok_or_else(|| Error::validation("example stream ended before N iterations"))?;
        trajectory.push(model.params().to_vec());
        losses.push(sgd_step(model, &x, y, eta)?);
    }
    finish(model, trajectory, losses, rng)
}

fn finish<D: Differentiable, R: Rng + ?Sized>(
    model: &mut D,
    trajectory: Vec<Vec<f64>>,
    losses: Vec<f64>,
    rng: &mut R,
) -> Result<OnlineSgdResult> {
    let last = model.params().to_vec();
    let selected = rng.random_range(0..trajectory.len());
    model.params_mut().copy_from_slice(&trajectory[selected]);
    let grad_evals = losses.len();
    Ok(OnlineSgdResult {
        trajectory,
        last,
        selected,
        losses,
        grad_evals,
    })
}

/// Online SGD over the chronological training interactions: each
/// interaction gives a positive example (+1) followed by one with a uniform
/// negative destination (-1). The stream wraps around when `n` exceeds it.
/// Memory-family models write each interaction into memory with the current
/// parameters after its two examples.
pub fn online_sgd_graph(
    model: &mut Model,
    g: &TemporalGraph,
    split: &SplitSpec,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<OnlineSgdResult> {
    if n == 0 {
        return Err(Error::validation("online SGD needs N >= 1"));
    }
    let train = split.train();
    if train.is_empty() {
        return Err(Error::validation("training split is empty"));
    }
    let mut neg_rng = stream_rng(seed, Stream::Negatives);
    let mut samp_rng = stream_rng(seed, Stream::Sampling);
    let negatives = NegativeSampler::All(g.num_nodes());
    let mut memory = match model.config().method {
        Method::Memory => Some(model.init_memory(g)?),
        _ => None,
    };
    let mut trajectory = Vec::with_capacity(n);
    let mut losses = Vec::with_capacity(n);
    let mut e = train.start;
    while trajectory.len() < n {
        if e == train.end {
            e = train.start;
            if let Some(m) = memory.as_mut() {
                *m = model.init_memory(g)?;
            }
        }
        let (s, d, t) = (g.src(e), g.dst(e), g.timestamp(e));
        let neg = negatives.sample(&mut neg_rng, d)?;
        for (dst, y) in [(d, 1.0), (neg, -1.0)] {
            if trajectory.len() == n {
                break;
            }
            let x = link_input(model, g, s, dst, t, memory.as_ref(), &mut samp_rng)?;
            trajectory.push(model.theta().to_vec());
            losses.push(sgd_step(model, &x, y, eta)?);
        }
        if let Some(m) = memory.as_mut() {
            model.memory_step(m, g, e)?;
        }
        e += 1;
    }
    let mut pick = stream_rng(seed, Stream::Trajectory);
    finish(model, trajectory, losses, &mut pick)
}
