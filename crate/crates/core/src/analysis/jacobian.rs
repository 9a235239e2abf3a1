use super::fla::JacobianMatrix;
use crate::error::{Error, Result};
use crate::graph::{SplitSpec, TemporalGraph};
use crate::models::{link_input, Method, Model, ModelInput};
use crate::rng::{stream_rng, Stream};
use crate::training::{Differentiable, NegativeSampler};

/// Stacks `grad_theta f(x_i)` for every example.
pub fn compute_jacobian<D: Differentiable>(model: &D, examples: &[(D::Input, f64)]) -> Result<JacobianMatrix> {
    let p = model.params().len();
    let mut data = Vec::with_capacity(examples.len() * p);
    let mut labels = Vec::with_capacity(examples.len());
    for (x, y) in examples {
        let (_, g) = model.output_and_grad(x)?;
        data.extend_from_slice(&g);
        labels.push(*y);
    }
    JacobianMatrix::new(examples.len(), p, data, labels)
}

/// Labeled link examples for the alignment score: the last `n_sub / 2`
/// training interactions as positives (+1), each followed by the same source
/// paired with a uniformly drawn destination (-1).
///
/// A negative whose encoder input is identical to the positive destination's
/// (two nodes with no history in a featureless graph, say) would carry the
/// opposite label on the same Jacobian row and make the score unbounded, so
/// it is redrawn up to [`NEGATIVE_REDRAWS`] times.
///
/// Memory-family inputs are taken from an event-by-event replay of the whole
/// training prefix with the model's current parameters, so each example sees
/// exactly the memory that existed just before its interaction.
pub fn link_examples(model: &Model, g: &TemporalGraph, split: &SplitSpec, n_sub: usize, seed: u64) -> Result<Vec<(ModelInput, f64)>> {
    if n_sub < 2 || n_sub % 2 != 0 {
        return Err(Error::validation(format!("N_sub must be an even number >= 2, got {n_sub}")));
    }
    let train = split.train();
    let half = n_sub / 2;
    if train.len() < half {
        return Err(Error::validation(format!(
            "N_sub = {n_sub} needs {half} training interactions, only {} available",
            train.len()
        )));
    }
    let first = train.end - half;
    let mut neg_rng = stream_rng(seed, Stream::Negatives);
    let mut samp_rng = stream_rng(seed, Stream::Sampling);
    let negatives = NegativeSampler::All(g.num_nodes());
    let mut memory = match model.config().method {
        Method::Memory => Some(model.init_memory(g)?),
        _ => None,
    };
    let mut out = Vec::with_capacity(n_sub);
    let start = if memory.is_some() { train.start } else { first };
    for e in start..train.end {
        if e >= first {
            let (s, d, t) = (g.src(e), g.dst(e), g.timestamp(e));
            let pos = link_input(model, g, s, d, t, memory.as_ref(), &mut samp_rng)?;
            let mut neg = link_input(model, g, s, negatives.sample(&mut neg_rng, d)?, t, memory.as_ref(), &mut samp_rng)?;
            for _ in 0..NEGATIVE_REDRAWS {
                if !same_destination(&pos, &neg) {
                    break;
                }
                let n = negatives.sample(&mut neg_rng, d)?;
                neg = link_input(model, g, s, n, t, memory.as_ref(), &mut samp_rng)?;
            }
            out.push((pos, 1.0));
            out.push((neg, -1.0));
        }
        if let Some(m) = memory.as_mut() {
            model.memory_step(m, g, e)?;
        }
    }
    Ok(out)
}

pub const NEGATIVE_REDRAWS: usize = 32;

fn same_destination(a: &ModelInput, b: &ModelInput) -> bool {
    match (a, b) {
        (ModelInput::Link(_, x), ModelInput::Link(_, y)) => x == y,
        _ => false,
    }
}

/// Jacobian of a link-prediction model over [`link_examples`].
pub fn link_jacobian(model: &Model, g: &TemporalGraph, split: &SplitSpec, n_sub: usize, seed: u64) -> Result<JacobianMatrix> {
    let examples = link_examples(model, g, split, n_sub, seed)?;
    compute_jacobian(model, &examples)
}
