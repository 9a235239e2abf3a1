use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Optimizer, TrainConfig};
use super::negatives::NegativeSampler;
use crate::error::{Error, Result};
use crate::evaluation::{average_precision, evaluate_range, EvalOptions, ModelScorer, Setting};
use crate::graph::{SplitSpec, TemporalGraph};
use crate::models::{link_input, loss_derivative, loss_value, LossKind, Method, Model, ModelInput};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_ap: f64,
    pub val_ap: f64,
    pub loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "epoch,train_ap,val_ap,loss,seconds")?;
        for r in &self.epochs {
            writeln!(w, "{},{},{},{},{:.3}", r.epoch, r.train_ap, r.val_ap, r.loss, r.seconds)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The model at its best validation epoch (the initial model when no
    /// epoch ran).
    pub model: Model,
    pub history: TrainHistory,
    pub best_epoch: Option<usize>,
    pub best_val_ap: Option<f64>,
}

/// Mini-batch link-prediction training over the chronological training
/// interactions, one or more uniform negatives per positive, with early
/// stopping on validation AP.
///
/// Memory-family models start every epoch from fresh memory. Each batch is
/// scored with the memory from before the batch, and the batch is written
/// into memory after the parameter update.
pub fn train_link_prediction(
    model: &Model,
    g: &TemporalGraph,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let train = split.train();
    if train.is_empty() {
        return Err(Error::validation("training split is empty"));
    }
    let mut model = model.clone();
    let mut history = TrainHistory::default();
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut since_best = 0usize;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, cfg.weight_decay, model.num_params());
    let mut neg_rng = stream_rng(cfg.seed, Stream::Negatives);
    let mut samp_rng = stream_rng(cfg.seed, Stream::Sampling);
    let negatives = NegativeSampler::All(g.num_nodes());
    let (pos_label, neg_label) = match cfg.loss {
        LossKind::Bce => (1.0, 0.0),
        LossKind::Logistic => (1.0, -1.0),
    };

    for epoch in 0..cfg.max_epochs {
        let started = Instant::now();
        let mut memory = match model.config().method {
            Method::Memory => Some(model.init_memory(g)?),
            _ => None,
        };
        let mut scores = Vec::with_capacity(2 * train.len());
        let mut labels = Vec::with_capacity(2 * train.len());
        let mut loss_sum = 0.0;
        let mut n_examples = 0usize;
        let mut start = train.start;
        while start < train.end {
            let end = (start + cfg.batch_size).min(train.end);
            let mut grad = vec![0.0; model.num_params()];
            let mut batch_examples = 0usize;
            for e in start..end {
                let (s, d, t) = (g.src(e), g.dst(e), g.timestamp(e));
                let pos = link_input(&model, g, s, d, t, memory.as_ref(), &mut samp_rng)?;
                let ModelInput::Link(src_in, _) = &pos else { unreachable!() };
                let mut examples = vec![(pos.clone(), pos_label, true)];
                for _ in 0..cfg.negatives_per_positive {
                    let n = negatives.sample(&mut neg_rng, d)?;
                    let neg_in = crate::models::node_input(&model, g, n, t, memory.as_ref(), &mut samp_rng)?;
                    examples.push((ModelInput::Link(src_in.clone(), neg_in), neg_label, false));
                }
                for (x, y, is_pos) in &examples {
                    let (f, cache) = model.forward_with(model.theta(), x)?;
                    loss_sum += loss_value(cfg.loss, f, *y)?;
                    let dl = loss_derivative(cfg.loss, f, *y)?;
                    model.backward_with(model.theta(), x, &cache, dl, &mut grad)?;
                    scores.push(f);
                    labels.push(*is_pos);
                    batch_examples += 1;
                }
            }
            n_examples += batch_examples;
            let scale = 1.0 / batch_examples as f64;
            grad.iter_mut().for_each(|x| *x *= scale);
            opt.step(model.theta_mut(), &grad);
            if let Some(m) = memory.as_mut() {
                for e in start..end {
                    model.memory_step(m, g, e)?;
                }
            }
            start = end;
        }
        let train_ap = average_precision(&scores, &labels)?;
        let val_ap = if split.val().is_empty() {
            f64::NAN
        } else {
            let mut scorer = ModelScorer::new(&model, g, memory, cfg.seed)?;
            let opts = EvalOptions {
                setting: Setting::Transductive,
                rank_negatives: 0,
                batch_size: cfg.batch_size,
                seed: cfg.seed,
            };
            evaluate_range(&mut scorer, g, split.val(), None, &negatives, &opts)?.ap
        };
        let record = EpochRecord {
            epoch,
            train_ap,
            val_ap,
            loss: loss_sum / n_examples as f64,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: loss {:.4} train AP {train_ap:.4} val AP {val_ap:.4}",
            record.loss
        );
        history.epochs.push(record);

        let improved = match &best {
            None => true,
            Some((_, b, _)) => val_ap > *b,
        };
        if improved || val_ap.is_nan() {
            best = Some((epoch, val_ap, model.theta().to_vec()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let (best_epoch, best_val_ap) = match best {
        Some((epoch, ap, theta)) => {
            model.set_theta(&theta)?;
            (Some(epoch), Some(ap))
        }
        None => (None, None),
    };
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        best_val_ap,
    })
}
