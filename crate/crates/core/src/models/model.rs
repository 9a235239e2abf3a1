use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::classifier::{self, ClassifierCache, ClassifierGrads, ClassifierView};
use super::config::{AlphaMode, HeadKind, Method, ModelConfig};
use super::features::{EventFeatures, FeatureTree};
use super::gnn::{self, GnnCache, GnnView};
use super::layout::ParamLayout;
use super::linalg::{dot, matvec_new};
use super::memory::{self, MemoryCache, MemoryInput, MemoryState, MemoryView};
use super::rnn::{self, RnnCache, RnnView};
use super::stone::{self, StoneCache, StoneView};
use super::time_encoding::TimeEncoder;
use crate::error::{Error, Result};
use crate::graph::TemporalGraph;

/// Encoder input for one node at one query time.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeInput {
    /// Newest-first event features (stone, rnn).
    Events(EventFeatures),
    Tree(FeatureTree),
    Memory(MemoryInput),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelInput {
    Node(NodeInput),
    Link(NodeInput, NodeInput),
}

#[derive(Debug, Clone)]
enum EncoderCache {
    Stone(StoneCache),
    Gnn(GnnCache),
    Rnn(RnnCache),
    Memory(Option<MemoryCache>),
}

impl EncoderCache {
    fn margin(&self) -> f64 {
        match self {
            EncoderCache::Stone(c) => c.min_abs_preactivation(),
            EncoderCache::Gnn(c) => c.min_abs_preactivation(),
            EncoderCache::Rnn(c) => c.min_abs_preactivation(),
            EncoderCache::Memory(c) => c.as_ref().map_or(f64::INFINITY, |c| c.min_abs_preactivation()),
        }
    }
}

/// Intermediates of one forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    encoders: Vec<(EncoderCache, Vec<f64>)>,
    head: Option<ClassifierCache>,
}

impl ForwardCache {
    /// Smallest `|pre-activation|` seen anywhere, used to keep gradient
    /// checks away from ReLU kinks.
    pub fn kink_margin(&self) -> f64 {
        let enc = self.encoders.iter().fold(f64::INFINITY, |m, (c, _)| m.min(c.margin()));
        self.head
            .as_ref()
            .map_or(enc, |h| enc.min(h.min_abs_preactivation()))
    }

    pub fn embeddings(&self) -> impl Iterator<Item = &[f64]> {
        self.encoders.iter().map(|(_, h)| h.as_slice())
    }
}

/// A model with its trainable parameters in one flat vector.
///
/// Flattening order is the layout's block order: encoder blocks (stone:
/// `alpha`, `W1`, `W2`; gnn: `W1..W{L-1}`; rnn: `W1`, `W2`; memory: `W1`,
/// `W2`, `W3`), then the head (`V1`, `b1`, `V2`, `b2` for links, a single
/// readout row for nodes). Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    cfg: ModelConfig,
    layout: ParamLayout,
    frozen_layout: ParamLayout,
    theta: Vec<f64>,
    frozen: Vec<f64>,
    n_encoder_blocks: usize,
    time_encoder: TimeEncoder,
}

fn layouts(cfg: &ModelConfig) -> (ParamLayout, ParamLayout, usize) {
    let m = cfg.hidden;
    let d = cfg.d_in();
    let mut l = ParamLayout::new();
    let mut f = ParamLayout::new();
    match cfg.method {
        Method::Stone => {
            match cfg.alpha {
                AlphaMode::Trainable => l.push("alpha", 1, cfg.k),
                AlphaMode::Fixed => f.push("alpha", 1, cfg.k),
            };
            l.push("W1", d, d);
            l.push("W2", m, d);
        }
        Method::Gnn => {
            l.push("W1", m, d);
            for layer in 2..cfg.layers {
                l.push(format!("W{layer}"), m, m);
            }
        }
        Method::Rnn => {
            f.push("W0", m, d);
            l.push("W1", m, m);
            l.push("W2", m, m);
        }
        Method::Memory => {
            f.push("W0", m, cfg.features.d_n);
            l.push("W1", m, m);
            l.push("W2", m, m);
            l.push("W3", m, cfg.d_msg());
        }
    }
    let n_enc = l.blocks().len();
    match cfg.head {
        HeadKind::Link => {
            l.push("V1", cfg.mlp_hidden, 2 * cfg.embed_dim());
            l.push("b1", cfg.mlp_hidden, 1);
            l.push("V2", 1, cfg.mlp_hidden);
            l.push("b2", 1, 1);
        }
        HeadKind::Node => {
            let name = match cfg.method {
                Method::Stone => "readout".to_string(),
                Method::Gnn => format!("W{}", cfg.layers),
                Method::Rnn => "W3".to_string(),
                Method::Memory => "W4".to_string(),
            };
            l.push(name, 1, cfg.embed_dim());
        }
    }
    (l, f, n_enc)
}

fn split_blocks<'a>(layout: &ParamLayout, mut buf: &'a mut [f64]) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(layout.blocks().len());
    for b in layout.blocks() {
        let (head, tail) = buf.split_at_mut(b.len());
        out.push(head);
        buf = tail;
    }
    out
}

impl Model {
    /// Draws every matrix entry from `N(0, 1/m)` with `m = cfg.hidden`,
    /// trainable stone slot weights from `U(-sqrt(3/K), sqrt(3/K))`, and
    /// zero biases. Fixed slot weights are `1/K`.
    pub fn init<R: Rng + ?Sized>(cfg: ModelConfig, rng: &mut R) -> Result<Model> {
        cfg.validate()?;
        let (layout, frozen_layout, n_enc) = layouts(&cfg);
        let normal = Normal::new(0.0, (1.0 / cfg.hidden as f64).sqrt())
            .map_err(|e| Error::validation(e.to_string()))?;
        let bound = (3.0 / cfg.k as f64).sqrt();
        let uniform = Uniform::new(-bound, bound).map_err(|e| Error::validation(e.to_string()))?;
        let mut fill = |l: &ParamLayout| -> Vec<f64> {
            let mut v = Vec::with_capacity(l.len());
            for b in l.blocks() {
                match b.name.as_str() {
                    "alpha" if cfg.alpha == AlphaMode::Fixed => {
                        v.extend(std::iter::repeat_n(1.0 / cfg.k as f64, b.len()))
                    }
                    "alpha" => v.extend((0..b.len()).map(|_| uniform.sample(rng))),
                    "b1" | "b2" => v.extend(std::iter::repeat_n(0.0, b.len())),
                    _ => v.extend((0..b.len()).map(|_| normal.sample(rng))),
                }
            }
            v
        };
        let theta = fill(&layout);
        let frozen = fill(&frozen_layout);
        let time_encoder = TimeEncoder::new(cfg.features.d_t);
        Ok(Model {
            cfg,
            layout,
            frozen_layout,
            theta,
            frozen,
            n_encoder_blocks: n_enc,
            time_encoder,
        })
    }

    /// Rebuilds a model from stored parameters.
    pub fn from_parts(cfg: ModelConfig, theta: Vec<f64>, frozen: Vec<f64>) -> Result<Model> {
        cfg.validate()?;
        let (layout, frozen_layout, n_enc) = layouts(&cfg);
        if theta.len() != layout.len() || frozen.len() != frozen_layout.len() {
            return Err(Error::dimension(format!(
                "parameter vectors of length {}/{} do not fit layout {}/{}",
                theta.len(),
                frozen.len(),
                layout.len(),
                frozen_layout.len()
            )));
        }
        let time_encoder = TimeEncoder::new(cfg.features.d_t);
        Ok(Model {
            cfg,
            layout,
            frozen_layout,
            theta,
            frozen,
            n_encoder_blocks: n_enc,
            time_encoder,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn frozen_layout(&self) -> &ParamLayout {
        &self.frozen_layout
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::dimension(format!(
                "expected {} parameters, got {}",
                self.theta.len(),
                theta.len()
            )));
        }
        self.theta.copy_from_slice(theta);
        Ok(())
    }

    pub fn frozen(&self) -> &[f64] {
        &self.frozen
    }

    pub fn time_encoder(&self) -> &TimeEncoder {
        &self.time_encoder
    }

    fn block<'a>(&self, theta: &'a [f64], name: &str) -> &'a [f64] {
        let b = self.layout.block(name).expect("block exists");
        &theta[b.range()]
    }

    fn frozen_block(&self, name: &str) -> &[f64] {
        let b = self.frozen_layout.block(name).expect("frozen block exists");
        &self.frozen[b.range()]
    }

    fn residual(&self) -> f64 {
        if self.cfg.residual {
            1.0
        } else {
            0.0
        }
    }

    fn stone_view<'a>(&'a self, theta: &'a [f64]) -> StoneView<'a> {
        let alpha = match self.cfg.alpha {
            AlphaMode::Trainable => self.block(theta, "alpha"),
            AlphaMode::Fixed => self.frozen_block("alpha"),
        };
        StoneView {
            alpha,
            w1: self.block(theta, "W1"),
            w2: self.block(theta, "W2"),
            d_in: self.cfg.d_in(),
            d_out: self.cfg.hidden,
            act: self.cfg.activation,
        }
    }

    fn gnn_view<'a>(&'a self, theta: &'a [f64]) -> GnnView<'a> {
        let weights = self.layout.blocks()[..self.n_encoder_blocks]
            .iter()
            .map(|b| &theta[b.range()])
            .collect();
        GnnView {
            weights,
            d: self.cfg.d_in(),
            m: self.cfg.hidden,
            residual: self.residual(),
            act: self.cfg.activation,
        }
    }

    fn rnn_view<'a>(&'a self, theta: &'a [f64]) -> RnnView<'a> {
        RnnView {
            w0: self.frozen_block("W0"),
            w1: self.block(theta, "W1"),
            w2: self.block(theta, "W2"),
            d: self.cfg.d_in(),
            m: self.cfg.hidden,
            steps: self.cfg.layers - 1,
            residual: self.residual(),
            act: self.cfg.activation,
        }
    }

    pub fn memory_view<'a>(&'a self, theta: &'a [f64]) -> MemoryView<'a> {
        MemoryView {
            w1: self.block(theta, "W1"),
            w2: self.block(theta, "W2"),
            w3: self.block(theta, "W3"),
            m: self.cfg.hidden,
            d_msg: self.cfg.d_msg(),
            act: self.cfg.activation,
        }
    }

    fn encode(&self, theta: &[f64], input: &NodeInput) -> Result<(Vec<f64>, EncoderCache)> {
        match (self.cfg.method, input) {
            (Method::Stone, NodeInput::Events(h)) => {
                let (out, c) = stone::forward(&self.stone_view(theta), h)?;
                Ok((out, EncoderCache::Stone(c)))
            }
            (Method::Gnn, NodeInput::Tree(t)) => {
                let (out, c) = gnn::forward(&self.gnn_view(theta), t)?;
                Ok((out, EncoderCache::Gnn(c)))
            }
            (Method::Rnn, NodeInput::Events(h)) => {
                let (out, c) = rnn::forward(&self.rnn_view(theta), h)?;
                Ok((out, EncoderCache::Rnn(c)))
            }
            (Method::Memory, NodeInput::Memory(m)) => {
                let (out, c) = memory::forward(&self.memory_view(theta), m)?;
                Ok((out, EncoderCache::Memory(c)))
            }
            (method, _) => Err(Error::validation(format!(
                "input kind does not match method {method}"
            ))),
        }
    }

    fn encode_backward(
        &self,
        theta: &[f64],
        input: &NodeInput,
        cache: &EncoderCache,
        dh: &[f64],
        grads: &mut [&mut [f64]],
    ) -> Result<()> {
        match (input, cache) {
            (NodeInput::Events(h), EncoderCache::Stone(c)) => {
                let view = self.stone_view(theta);
                match self.cfg.alpha {
                    AlphaMode::Trainable => {
                        let [ga, g1, g2] = grads else { unreachable!() };
                        stone::backward(&view, h, c, dh, Some(ga), g1, g2);
                    }
                    AlphaMode::Fixed => {
                        let [g1, g2] = grads else { unreachable!() };
                        stone::backward(&view, h, c, dh, None, g1, g2);
                    }
                }
            }
            (NodeInput::Tree(t), EncoderCache::Gnn(c)) => {
                gnn::backward(&self.gnn_view(theta), t, c, dh, grads);
            }
            (NodeInput::Events(_), EncoderCache::Rnn(c)) => {
                let [g1, g2] = grads else { unreachable!() };
                rnn::backward(&self.rnn_view(theta), c, dh, g1, g2);
            }
            (NodeInput::Memory(m), EncoderCache::Memory(c)) => {
                let [g1, g2, g3] = grads else { unreachable!() };
                memory::backward(&self.memory_view(theta), m, c.as_ref(), dh, g1, g2, g3);
            }
            _ => return Err(Error::validation("forward cache does not match input")),
        }
        Ok(())
    }

    fn classifier_view<'a>(&self, theta: &'a [f64]) -> ClassifierView<'a> {
        ClassifierView {
            v1: self.block(theta, "V1"),
            b1: self.block(theta, "b1"),
            v2: self.block(theta, "V2"),
            b2: self.block(theta, "b2")[0],
            d_h: self.cfg.embed_dim(),
            d_mlp: self.cfg.mlp_hidden,
        }
    }

    fn readout<'a>(&self, theta: &'a [f64]) -> &'a [f64] {
        let b = self.layout.blocks().last().expect("head block");
        &theta[b.range()]
    }

    /// Embedding of one node.
    pub fn embed(&self, input: &NodeInput) -> Result<Vec<f64>> {
        Ok(self.encode(&self.theta, input)?.0)
    }

    /// Link logit for two precomputed embeddings.
    pub fn score_embeddings(&self, ha: &[f64], hb: &[f64]) -> Result<f64> {
        if self.cfg.head != HeadKind::Link {
            return Err(Error::validation("model has no link head"));
        }
        let d = self.cfg.embed_dim();
        if ha.len() != d || hb.len() != d {
            return Err(Error::dimension("embedding width does not match the classifier"));
        }
        Ok(classifier::link_score(&self.classifier_view(&self.theta), ha, hb).0)
    }

    /// Scalar output (logit for links, readout for nodes) at `theta`.
    pub fn forward_with(&self, theta: &[f64], input: &ModelInput) -> Result<(f64, ForwardCache)> {
        if theta.len() != self.layout.len() {
            return Err(Error::dimension("parameter vector does not match the model"));
        }
        match (self.cfg.head, input) {
            (HeadKind::Node, ModelInput::Node(x)) => {
                let (h, c) = self.encode(theta, x)?;
                let out = dot(self.readout(theta), &h);
                Ok((
                    out,
                    ForwardCache {
                        encoders: vec![(c, h)],
                        head: None,
                    },
                ))
            }
            (HeadKind::Link, ModelInput::Link(a, b)) => {
                let (ha, ca) = self.encode(theta, a)?;
                let (hb, cb) = self.encode(theta, b)?;
                let (out, hc) = classifier::link_score(&self.classifier_view(theta), &ha, &hb);
                Ok((
                    out,
                    ForwardCache {
                        encoders: vec![(ca, ha), (cb, hb)],
                        head: Some(hc),
                    },
                ))
            }
            _ => Err(Error::validation("input shape does not match the model head")),
        }
    }

    pub fn output_with(&self, theta: &[f64], input: &ModelInput) -> Result<f64> {
        Ok(self.forward_with(theta, input)?.0)
    }

    pub fn output(&self, input: &ModelInput) -> Result<f64> {
        self.output_with(&self.theta, input)
    }

    /// Adds `dout * d output / d theta` to `grad`.
    pub fn backward_with(
        &self,
        theta: &[f64],
        input: &ModelInput,
        cache: &ForwardCache,
        dout: f64,
        grad: &mut [f64],
    ) -> Result<()> {
        if grad.len() != self.layout.len() {
            return Err(Error::dimension("gradient buffer does not match the model"));
        }
        let mut blocks = split_blocks(&self.layout, grad);
        let (enc_grads, head_grads) = blocks.split_at_mut(self.n_encoder_blocks);
        match (input, &cache.head) {
            (ModelInput::Node(x), None) => {
                let (c, h) = &cache.encoders[0];
                let w = self.readout(theta);
                for (g, hv) in head_grads[0].iter_mut().zip(h) {
                    *g += dout * hv;
                }
                let dh: Vec<f64> = w.iter().map(|v| dout * v).collect();
                self.encode_backward(theta, x, c, &dh, enc_grads)
            }
            (ModelInput::Link(a, b), Some(hc)) => {
                let [v1, b1, v2, b2] = head_grads else { unreachable!() };
                let (da, db) = classifier::backward(
                    &self.classifier_view(theta),
                    hc,
                    dout,
                    ClassifierGrads {
                        v1,
                        b1,
                        v2,
                        b2: &mut b2[0],
                    },
                );
                self.encode_backward(theta, a, &cache.encoders[0].0, &da, enc_grads)?;
                self.encode_backward(theta, b, &cache.encoders[1].0, &db, enc_grads)
            }
            _ => Err(Error::validation("forward cache does not match input")),
        }
    }

    /// Output and its gradient at the model's own parameters.
    pub fn output_and_grad(&self, input: &ModelInput) -> Result<(f64, Vec<f64>)> {
        let (out, cache) = self.forward_with(&self.theta, input)?;
        let mut grad = vec![0.0; self.theta.len()];
        self.backward_with(&self.theta, input, &cache, 1.0, &mut grad)?;
        Ok((out, grad))
    }

    /// Fresh memory with `s(0) = W0 x` for every node.
    pub fn init_memory(&self, g: &TemporalGraph) -> Result<MemoryState> {
        if self.cfg.method != Method::Memory {
            return Err(Error::validation("only the memory family keeps node state"));
        }
        if g.node_dim() != self.cfg.features.d_n {
            return Err(Error::dimension("graph node features do not match the model"));
        }
        let m = self.cfg.hidden;
        let w0 = self.frozen_block("W0");
        let mut init = Vec::with_capacity(g.num_nodes() * m);
        for v in 0..g.num_nodes() {
            init.extend(matvec_new(w0, m, g.node_dim(), g.node_feat(v as u32)));
        }
        Ok(MemoryState::new(m, init))
    }

    /// Applies interaction `edge` of `g` to `state` using the current
    /// parameters. Messages are `[e | psi(t - last update)]`, with a zero
    /// elapsed time on a node's first interaction.
    pub fn memory_step(&self, state: &mut MemoryState, g: &TemporalGraph, edge: usize) -> Result<()> {
        self.memory_step_with(&self.theta, state, g, edge)
    }

    pub fn memory_step_with(
        &self,
        theta: &[f64],
        state: &mut MemoryState,
        g: &TemporalGraph,
        edge: usize,
    ) -> Result<()> {
        let (i, j, t) = (g.src(edge), g.dst(edge), g.timestamp(edge));
        let msg = |v: u32| -> Result<Vec<f64>> {
            let mut out = g.edge_feat(edge).to_vec();
            let dt = state.last_time(v).map_or(0.0, |last| t - last);
            self.time_encoder.encode_into(dt.max(0.0), &mut out)?;
            Ok(out)
        };
        let (mi, mj) = (msg(i)?, msg(j)?);
        state.step(&self.memory_view(theta), i, j, t, mi, mj)
    }
}
