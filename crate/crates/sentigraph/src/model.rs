//! The assembled network: input composition → BiLSTM → graph attention
//! → graph-convolution stack → aspect mask → retrieval attention →
//! softmax classifier. One forward/backward unit with a registry that
//! enumerates every trainable tensor exactly once.

use crate::features::{compose_input, relative_distance, Example, Polarity, Vocab};
use crate::graph::{AdjMatrix, ParseTree};
use crate::layers::{
    aspect_mask, aspect_mask_backward, bilstm_backward, bilstm_forward, classify,
    classify_backward, cross_entropy, cross_entropy_backward, gat_backward, gat_forward,
    gcn_backward, gcn_forward, retrieval_attention, retrieval_attention_backward, AttentionCache,
    BiLstmCache, BiLstmParams, ClassifierCache, ClassifierParams, GatCache, GatParams, GcnCache,
    GcnParams,
};
use crate::numerics::{argmax, axpy, Matrix};
use crate::{Error, Result};

/// Hyperparameters fixing every tensor shape.
///
/// The graph layers output `2 * hidden` so their features stay
/// dot-product compatible with the BiLSTM states in the retrieval
/// attention; `gat_dim` defaults to the same width.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Word-vector width.
    pub emb_dim: usize,
    /// Position-vector width.
    pub pos_dim: usize,
    /// LSTM hidden size per direction; encoder output width is 2×this.
    pub hidden: usize,
    /// Graph-attention output width.
    pub gat_dim: usize,
    /// Depth of the graph-convolution stack (1–4).
    pub gcn_layers: usize,
    /// Distances clip here; the position table has `d_max + 1` rows.
    pub d_max: usize,
    /// LeakyReLU slope for attention scores.
    pub leaky_slope: f64,
    /// Divide adjacency rows by node degree inside the convolution.
    pub mean_aggregation: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let hidden = 300;
        ModelConfig {
            emb_dim: 300,
            pos_dim: 100,
            hidden,
            gat_dim: 2 * hidden,
            gcn_layers: 2,
            d_max: 99,
            leaky_slope: 0.2,
            mean_aggregation: false,
        }
    }
}

impl ModelConfig {
    /// A deliberately tiny configuration for gradient-check harnesses,
    /// where cost grows with the parameter count.
    pub fn small() -> Self {
        ModelConfig {
            emb_dim: 5,
            pos_dim: 3,
            hidden: 3,
            gat_dim: 6,
            gcn_layers: 2,
            d_max: 7,
            leaky_slope: 0.2,
            mean_aggregation: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("emb_dim", self.emb_dim),
            ("pos_dim", self.pos_dim),
            ("hidden", self.hidden),
            ("gat_dim", self.gat_dim),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("model.{name} must be positive")));
            }
        }
        if !(1..=4).contains(&self.gcn_layers) {
            return Err(Error::Config(format!(
                "model.gcn_layers must be in 1..=4, got {}",
                self.gcn_layers
            )));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config(format!(
                "model.leaky_slope must lie in (0, 1), got {}",
                self.leaky_slope
            )));
        }
        Ok(())
    }

    /// Width of a composed input row.
    pub fn input_dim(&self) -> usize {
        self.emb_dim + self.pos_dim
    }

    /// Width of the BiLSTM states, the graph-convolution outputs, and
    /// the pooled sentence representation.
    pub fn state_dim(&self) -> usize {
        2 * self.hidden
    }
}

/// LSTM direction tag used by tensor ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Fwd,
    Bwd,
}

/// Name of one trainable tensor in the registry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorId {
    Position,
    LstmWx(Direction),
    LstmWh(Direction),
    LstmBias(Direction),
    GatW,
    GatAttn,
    GcnW(usize),
    GcnBias(usize),
    ClassifierW,
    ClassifierBias,
}

impl TensorId {
    pub fn name(self) -> String {
        let dir = |d: Direction| match d {
            Direction::Fwd => "fwd",
            Direction::Bwd => "bwd",
        };
        match self {
            TensorId::Position => "position.table".into(),
            TensorId::LstmWx(d) => format!("bilstm.{}.w_x", dir(d)),
            TensorId::LstmWh(d) => format!("bilstm.{}.w_h", dir(d)),
            TensorId::LstmBias(d) => format!("bilstm.{}.bias", dir(d)),
            TensorId::GatW => "gat.w".into(),
            TensorId::GatAttn => "gat.attn".into(),
            TensorId::GcnW(l) => format!("gcn.{l}.w"),
            TensorId::GcnBias(l) => format!("gcn.{l}.bias"),
            TensorId::ClassifierW => "classifier.w".into(),
            TensorId::ClassifierBias => "classifier.bias".into(),
        }
    }

    /// Bias tensors are exempt from L2 regularization.
    pub fn is_bias(self) -> bool {
        matches!(
            self,
            TensorId::LstmBias(_) | TensorId::GcnBias(_) | TensorId::ClassifierBias
        )
    }
}

/// Every trainable tensor of the network. The frozen word table lives
/// outside (see [`crate::features::EmbeddingLoad`]).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// (d_max + 1) × pos_dim, trained with the model.
    pub position: Matrix,
    pub bilstm: BiLstmParams,
    pub gat: GatParams,
    pub gcn: Vec<GcnParams>,
    pub classifier: ClassifierParams,
}

impl ModelParams {
    /// All-zero tensors with shapes fixed by `config`.
    pub fn zeros(config: &ModelConfig) -> ModelParams {
        let state = config.state_dim();
        let mut gcn = Vec::with_capacity(config.gcn_layers);
        for l in 0..config.gcn_layers {
            let d_in = if l == 0 { config.gat_dim } else { state };
            gcn.push(GcnParams::zeros(d_in, state));
        }
        ModelParams {
            config: config.clone(),
            position: Matrix::zeros(config.d_max + 1, config.pos_dim),
            bilstm: BiLstmParams::zeros(config.input_dim(), config.hidden),
            gat: GatParams::zeros(state, config.gat_dim),
            gcn,
            classifier: ClassifierParams::zeros(state),
        }
    }

    /// Zeroed copy with identical shapes; the gradient accumulator.
    pub fn zeros_like(&self) -> ModelParams {
        ModelParams::zeros(&self.config)
    }

    /// Registry order: every trainable tensor exactly once.
    pub fn tensor_ids(&self) -> Vec<TensorId> {
        let mut ids = vec![
            TensorId::Position,
            TensorId::LstmWx(Direction::Fwd),
            TensorId::LstmWh(Direction::Fwd),
            TensorId::LstmBias(Direction::Fwd),
            TensorId::LstmWx(Direction::Bwd),
            TensorId::LstmWh(Direction::Bwd),
            TensorId::LstmBias(Direction::Bwd),
            TensorId::GatW,
            TensorId::GatAttn,
        ];
        for l in 0..self.gcn.len() {
            ids.push(TensorId::GcnW(l));
            ids.push(TensorId::GcnBias(l));
        }
        ids.push(TensorId::ClassifierW);
        ids.push(TensorId::ClassifierBias);
        ids
    }

    fn dir(&self, d: Direction) -> &crate::layers::LstmDirection {
        match d {
            Direction::Fwd => &self.bilstm.fwd,
            Direction::Bwd => &self.bilstm.bwd,
        }
    }

    fn dir_mut(&mut self, d: Direction) -> &mut crate::layers::LstmDirection {
        match d {
            Direction::Fwd => &mut self.bilstm.fwd,
            Direction::Bwd => &mut self.bilstm.bwd,
        }
    }

    /// Flat view of one tensor.
    pub fn tensor(&self, id: TensorId) -> &[f64] {
        match id {
            TensorId::Position => self.position.data(),
            TensorId::LstmWx(d) => self.dir(d).w_x.data(),
            TensorId::LstmWh(d) => self.dir(d).w_h.data(),
            TensorId::LstmBias(d) => &self.dir(d).b,
            TensorId::GatW => self.gat.w.data(),
            TensorId::GatAttn => &self.gat.a,
            TensorId::GcnW(l) => self.gcn[l].w.data(),
            TensorId::GcnBias(l) => &self.gcn[l].b,
            TensorId::ClassifierW => self.classifier.w.data(),
            TensorId::ClassifierBias => &self.classifier.b,
        }
    }

    pub fn tensor_mut(&mut self, id: TensorId) -> &mut [f64] {
        match id {
            TensorId::Position => self.position.data_mut(),
            TensorId::LstmWx(d) => self.dir_mut(d).w_x.data_mut(),
            TensorId::LstmWh(d) => self.dir_mut(d).w_h.data_mut(),
            TensorId::LstmBias(d) => &mut self.dir_mut(d).b,
            TensorId::GatW => self.gat.w.data_mut(),
            TensorId::GatAttn => &mut self.gat.a,
            TensorId::GcnW(l) => self.gcn[l].w.data_mut(),
            TensorId::GcnBias(l) => &mut self.gcn[l].b,
            TensorId::ClassifierW => self.classifier.w.data_mut(),
            TensorId::ClassifierBias => &mut self.classifier.b,
        }
    }

    /// (rows, cols) of a tensor; vectors report one row.
    pub fn tensor_shape(&self, id: TensorId) -> (usize, usize) {
        match id {
            TensorId::Position => self.position.shape(),
            TensorId::LstmWx(d) => self.dir(d).w_x.shape(),
            TensorId::LstmWh(d) => self.dir(d).w_h.shape(),
            TensorId::LstmBias(d) => (1, self.dir(d).b.len()),
            TensorId::GatW => self.gat.w.shape(),
            TensorId::GatAttn => (1, self.gat.a.len()),
            TensorId::GcnW(l) => self.gcn[l].w.shape(),
            TensorId::GcnBias(l) => (1, self.gcn[l].b.len()),
            TensorId::ClassifierW => self.classifier.w.shape(),
            TensorId::ClassifierBias => (1, self.classifier.b.len()),
        }
    }

    pub fn param_count(&self) -> usize {
        self.tensor_ids()
            .into_iter()
            .map(|id| self.tensor(id).len())
            .sum()
    }
}

/// Per-example features resolved once: token ids, clipped distances,
/// and both adjacency forms.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub example: Example,
    pub ids: Vec<usize>,
    pub distances: Vec<usize>,
    pub adj: AdjMatrix,
    /// Aggregation weights for the convolution stack: the raw 0/1
    /// matrix, or its mean-normalized form under `mean_aggregation`.
    pub gcn_adj: Matrix,
}

/// Resolves an example against the vocabulary and its parse. A missing
/// parse falls back to the linear token chain.
pub fn prepare(
    example: &Example,
    tree: Option<&ParseTree>,
    vocab: &Vocab,
    config: &ModelConfig,
) -> Result<Prepared> {
    let adj = match tree {
        Some(t) => {
            if t.len() != example.len() {
                return Err(Error::Domain(format!(
                    "parse has {} tokens but the sentence has {}",
                    t.len(),
                    example.len()
                )));
            }
            AdjMatrix::from_tree(t)
        }
        None => AdjMatrix::linear_chain(example.len())?,
    };
    let gcn_adj = if config.mean_aggregation {
        adj.mean_normalized()
    } else {
        adj.matrix().clone()
    };
    Ok(Prepared {
        ids: vocab.ids(example),
        distances: relative_distance(example, config.d_max),
        example: example.clone(),
        adj,
        gcn_adj,
    })
}

/// Everything recorded by one forward pass, consumed by [`backward`].
pub struct Trace {
    x: Matrix,
    lstm_cache: BiLstmCache,
    gat_cache: GatCache,
    gcn_caches: Vec<GcnCache>,
    attn_cache: AttentionCache,
    cls_cache: ClassifierCache,
    pub probs: Vec<f64>,
}

/// Full pipeline; returns a valid 3-class distribution inside the trace.
pub fn forward(prep: &Prepared, embeddings: &Matrix, params: &ModelParams) -> Result<Trace> {
    let (s, e) = prep.example.aspect_span();
    let x = compose_input(&prep.ids, &prep.distances, embeddings, &params.position);
    let (h_lstm, lstm_cache) = bilstm_forward(&x, &params.bilstm);
    let (g, gat_cache) = gat_forward(&h_lstm, &prep.adj, &params.gat, params.config.leaky_slope)?;
    let mut gcn_caches = Vec::with_capacity(params.gcn.len());
    let mut node_feats = g;
    for layer in &params.gcn {
        let (next, cache) = gcn_forward(&node_feats, &prep.gcn_adj, layer)?;
        gcn_caches.push(cache);
        node_feats = next;
    }
    let masked = aspect_mask(&node_feats, s, e);
    let (r, attn_cache) = retrieval_attention(&h_lstm, &masked, s, e)?;
    let (probs, cls_cache) = classify(&r, &params.classifier)?;
    Ok(Trace {
        x,
        lstm_cache,
        gat_cache,
        gcn_caches,
        attn_cache,
        cls_cache,
        probs,
    })
}

/// Cross-entropy of the recorded forward against `label`, with its
/// gradients accumulated into `grads` (shapes must mirror `params`).
/// Returns the loss.
pub fn backward(
    trace: &Trace,
    prep: &Prepared,
    label: Polarity,
    params: &ModelParams,
    grads: &mut ModelParams,
) -> f64 {
    let (s, e) = prep.example.aspect_span();
    let loss = cross_entropy(&trace.probs, label.index());

    let d_probs = cross_entropy_backward(&trace.probs, label.index());
    let (cls_grads, d_r) = classify_backward(&d_probs, &trace.cls_cache, &params.classifier);
    grads.classifier.w.add_assign(&cls_grads.w);
    axpy(1.0, &cls_grads.b, &mut grads.classifier.b);

    let (d_h_attn, d_masked) = retrieval_attention_backward(&d_r, &trace.attn_cache);
    let mut d_nodes = aspect_mask_backward(&d_masked, s, e);
    for (l, cache) in trace.gcn_caches.iter().enumerate().rev() {
        let (layer_grads, d_in) = gcn_backward(&d_nodes, cache, &params.gcn[l]);
        grads.gcn[l].w.add_assign(&layer_grads.w);
        axpy(1.0, &layer_grads.b, &mut grads.gcn[l].b);
        d_nodes = d_in;
    }
    let (gat_grads, d_h_gat) = gat_backward(&d_nodes, &trace.gat_cache, &params.gat);
    grads.gat.w.add_assign(&gat_grads.w);
    axpy(1.0, &gat_grads.a, &mut grads.gat.a);

    // The BiLSTM states feed both the graph stack and the retrieval
    // attention; their gradients add.
    let d_h_total = d_h_attn.add(&d_h_gat);
    let (lstm_grads, d_x) = bilstm_backward(&d_h_total, &trace.lstm_cache, &params.bilstm);
    for dir in [Direction::Fwd, Direction::Bwd] {
        let (g_src, g_dst) = match dir {
            Direction::Fwd => (&lstm_grads.fwd, &mut grads.bilstm.fwd),
            Direction::Bwd => (&lstm_grads.bwd, &mut grads.bilstm.bwd),
        };
        g_dst.w_x.add_assign(&g_src.w_x);
        g_dst.w_h.add_assign(&g_src.w_h);
        axpy(1.0, &g_src.b, &mut g_dst.b);
    }

    // Only the position slice of each input row is trainable; the word
    // table is frozen.
    let emb_dim = params.config.emb_dim;
    for (i, &d) in prep.distances.iter().enumerate() {
        axpy(1.0, &d_x.row(i)[emb_dim..], grads.position.row_mut(d));
    }
    debug_assert_eq!(trace.x.cols(), d_x.cols());
    loss
}

/// Argmax of [`forward`]; ties resolve to the lowest class index.
pub fn predict(prep: &Prepared, embeddings: &Matrix, params: &ModelParams) -> Result<Polarity> {
    let trace = forward(prep, embeddings, params)?;
    Polarity::from_index(argmax(&trace.probs))
}
