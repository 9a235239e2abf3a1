use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{auc_roc, average_precision, rank_of, MetricsReport, RankAccumulator, Setting};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SplitSpec, TemporalGraph};
use crate::models::{node_input, MemoryState, Method, Model};
use crate::rng::{stream_rng, Stream};
use crate::training::NegativeSampler;

/// Scores `(src, dst, t)` queries. Queries inside one call see the state
/// from before the call; `observe` then feeds the true interactions.
pub trait LinkScorer {
    fn score_batch(&mut self, queries: &[(NodeId, NodeId, f64)]) -> Result<Vec<f64>>;

    fn observe(&mut self, _edges: Range<usize>) -> Result<()> {
        Ok(())
    }
}

/// Scores through a model's encoder and link head. Embeddings are cached per
/// `(node, time)` within a batch.
pub struct ModelScorer<'a> {
    model: &'a Model,
    g: &'a TemporalGraph,
    memory: Option<MemoryState>,
    rng: ChaCha8Rng,
}

impl<'a> ModelScorer<'a> {
    pub fn new(model: &'a Model, g: &'a TemporalGraph, memory: Option<MemoryState>, seed: u64) -> Result<Self> {
        let memory = match (model.config().method, memory) {
            (Method::Memory, None) => Some(model.init_memory(g)?),
            (_, m) => m,
        };
        Ok(ModelScorer {
            model,
            g,
            memory,
            rng: stream_rng(seed, Stream::Sampling),
        })
    }

    /// Advances memory through `edges` without scoring anything.
    pub fn replay(&mut self, edges: Range<usize>) -> Result<()> {
        self.observe(edges)
    }

    pub fn into_memory(self) -> Option<MemoryState> {
        self.memory
    }
}

impl LinkScorer for ModelScorer<'_> {
    fn score_batch(&mut self, queries: &[(NodeId, NodeId, f64)]) -> Result<Vec<f64>> {
        let mut cache: HashMap<(NodeId, u64), Vec<f64>> = HashMap::new();
        let mut out = Vec::with_capacity(queries.len());
        for &(s, d, t) in queries {
            for v in [s, d] {
                if !cache.contains_key(&(v, t.to_bits())) {
                    let x = node_input(self.model, self.g, v, t, self.memory.as_ref(), &mut self.rng)?;
                    cache.insert((v, t.to_bits()), self.model.embed(&x)?);
                }
            }
            let hs = &cache[&(s, t.to_bits())];
            let hd = &cache[&(d, t.to_bits())];
            out.push(self.model.score_embeddings(hs, hd)?);
        }
        Ok(out)
    }

    fn observe(&mut self, edges: Range<usize>) -> Result<()> {
        if let Some(mem) = self.memory.as_mut() {
            for e in edges {
                self.model.memory_step(mem, self.g, e)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub setting: Setting,
    /// Negatives per positive for recall/MRR; 0 skips rank metrics.
    pub rank_negatives: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            setting: Setting::Transductive,
            rank_negatives: 100,
            batch_size: 600,
            seed: 0,
        }
    }
}

/// Scores every interaction in `edges` (restricted to those touching
/// `only_nodes` when given) against one uniform negative for AP/AUC and
/// `opts.rank_negatives` more for ranking. The scorer observes all of
/// `edges` in batches, filtered or not.
pub fn evaluate_range<S: LinkScorer>(
    scorer: &mut S,
    g: &TemporalGraph,
    edges: Range<usize>,
    only_nodes: Option<&BTreeSet<NodeId>>,
    negatives: &NegativeSampler,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    if opts.batch_size == 0 {
        return Err(Error::validation("batch size must be at least 1"));
    }
    let mut rng = stream_rng(opts.seed, Stream::Negatives);
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut ranks = RankAccumulator::default();
    let mut start = edges.start;
    while start < edges.end {
        let end = (start + opts.batch_size).min(edges.end);
        let mut queries = Vec::new();
        let mut evaluated = 0usize;
        for e in start..end {
            let (s, d, t) = (g.src(e), g.dst(e), g.timestamp(e));
            if let Some(nodes) = only_nodes {
                if !nodes.contains(&s) && !nodes.contains(&d) {
                    continue;
                }
            }
            evaluated += 1;
            queries.push((s, d, t));
            queries.push((s, negatives.sample(&mut rng, d)?, t));
            for _ in 0..opts.rank_negatives {
                queries.push((s, negatives.sample(&mut rng, d)?, t));
            }
        }
        if evaluated > 0 {
            let out = scorer.score_batch(&queries)?;
            let per = 2 + opts.rank_negatives;
            for chunk in out.chunks_exact(per) {
                scores.push(chunk[0]);
                labels.push(true);
                scores.push(chunk[1]);
                labels.push(false);
                if opts.rank_negatives > 0 {
                    ranks.push(rank_of(chunk[0], &chunk[2..]));
                }
            }
        }
        scorer.observe(start..end)?;
        start = end;
    }
    let n_eval = scores.len() / 2;
    if n_eval == 0 {
        return Err(Error::validation("evaluation set is empty"));
    }
    let mut recall_at = BTreeMap::new();
    let mut mrr = None;
    if opts.rank_negatives > 0 {
        recall_at.insert(1, ranks.recall_at(1));
        recall_at.insert(5, ranks.recall_at(5));
        mrr = Some(ranks.mrr());
    }
    Ok(MetricsReport {
        ap: average_precision(&scores, &labels)?,
        auc: auc_roc(&scores, &labels)?,
        recall_at,
        mrr,
        setting: opts.setting,
        n_eval,
    })
}

/// Negative pool and edge filter for a setting.
pub fn setting_filter<'s>(
    g: &TemporalGraph,
    split: &'s SplitSpec,
    setting: Setting,
) -> Result<(NegativeSampler, Option<&'s BTreeSet<NodeId>>)> {
    match setting {
        Setting::Transductive => Ok((NegativeSampler::All(g.num_nodes()), None)),
        Setting::Inductive => {
            if split.inductive_nodes.is_empty() {
                return Err(Error::validation("split has no inductive nodes"));
            }
            Ok((
                NegativeSampler::pool(split.inductive_nodes.iter().copied()),
                Some(&split.inductive_nodes),
            ))
        }
    }
}

/// Test-split metrics. Memory-family models first replay the training and
/// validation interactions.
pub fn evaluate(model: &Model, g: &TemporalGraph, split: &SplitSpec, opts: &EvalOptions) -> Result<MetricsReport> {
    let mut scorer = ModelScorer::new(model, g, None, opts.seed)?;
    scorer.replay(0..split.val_end_idx)?;
    let (neg, filter) = setting_filter(g, split, opts.setting)?;
    evaluate_range(&mut scorer, g, split.test(), filter, &neg, opts)
}

/// A scorer backed by a closure with no state, handy for baselines.
pub struct FnScorer<F>(pub F);

impl<F: FnMut(NodeId, NodeId, f64) -> f64> LinkScorer for FnScorer<F> {
    fn score_batch(&mut self, queries: &[(NodeId, NodeId, f64)]) -> Result<Vec<f64>> {
        Ok(queries.iter().map(|&(s, d, t)| (self.0)(s, d, t)).collect())
    }
}
