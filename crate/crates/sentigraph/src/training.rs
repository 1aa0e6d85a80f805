//! Parameter initialization, Adam with coupled L2, the per-example
//! training loop, and the gradient-check harness.

use std::fmt::Write as _;

use crate::features::Polarity;
use crate::model::{backward, forward, predict, ModelParams, Prepared, TensorId};
use crate::numerics::{argmax, finite_diff_grad, grad_rel_err, Matrix, Rng};
use crate::{Error, Result};

/// Optimizer settings. Learning rate and L2 strength default to the
/// reference configuration (0.001 and 1e-5); the moment constants are
/// Adam's canonical values.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global-norm gradient clip; off by default.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            l2: 1e-5,
            epochs: 30,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("train.learning_rate must be positive".into()));
        }
        if self.l2 < 0.0 {
            return Err(Error::Config("train.l2 must be non-negative".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("train.epochs must be positive".into()));
        }
        if !(0.0 < self.beta1 && self.beta1 < self.beta2 && self.beta2 < 1.0) {
            return Err(Error::Config(
                "adam constants must satisfy 0 < beta1 < beta2 < 1".into(),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("train.epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Per-tensor first/second moment accumulators plus the shared step
/// counter, aligned with the parameter registry order.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> AdamState {
        let shapes: Vec<usize> = params
            .tensor_ids()
            .into_iter()
            .map(|id| params.tensor(id).len())
            .collect();
        AdamState {
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// Random initialization: classifier weights standard normal, the
/// position table uniform(−0.01, 0.01), biases zero, everything else
/// uniform(−1/√fan_in, +1/√fan_in). Each tensor draws from its own
/// named stream, so the registry order cannot influence the values.
pub fn init_params(config: &crate::model::ModelConfig, rng: &Rng) -> ModelParams {
    let mut params = ModelParams::zeros(config);
    for id in params.tensor_ids() {
        if id.is_bias() {
            continue;
        }
        let mut stream = rng.stream(&format!("init/{}", id.name()));
        match id {
            TensorId::ClassifierW => {
                for v in params.tensor_mut(id) {
                    *v = stream.normal();
                }
            }
            TensorId::Position => {
                for v in params.tensor_mut(id) {
                    *v = stream.uniform(-0.01, 0.01);
                }
            }
            _ => {
                let (_, fan_in) = params.tensor_shape(id);
                let bound = 1.0 / (fan_in as f64).sqrt();
                for v in params.tensor_mut(id) {
                    *v = stream.uniform(-bound, bound);
                }
            }
        }
    }
    params
}

/// One bias-corrected Adam update over the whole registry. L2 folds
/// into the gradient as `g + 2·l2·θ` on every non-bias tensor; the step
/// counter increments once per call.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    let ids = params.tensor_ids();
    for (&id, _) in ids.iter().zip(&state.m) {
        if let Some(bad) = grads.tensor(id).iter().find(|g| !g.is_finite()) {
            return Err(Error::TrainingAbort(format!(
                "non-finite gradient {bad} in tensor {}",
                id.name()
            )));
        }
    }

    let clip_scale = match cfg.clip_norm {
        Some(c) => {
            let sq: f64 = ids
                .iter()
                .map(|&id| grads.tensor(id).iter().map(|g| g * g).sum::<f64>())
                .sum();
            let norm = sq.sqrt();
            if norm > c {
                c / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    };

    state.t += 1;
    let t = state.t as f64;
    let bc1 = 1.0 - cfg.beta1.powf(t);
    let bc2 = 1.0 - cfg.beta2.powf(t);
    for (k, &id) in ids.iter().enumerate() {
        let l2 = if id.is_bias() { 0.0 } else { cfg.l2 };
        let grad = grads.tensor(id).to_vec();
        let theta = params.tensor_mut(id);
        let m = &mut state.m[k];
        let v = &mut state.v[k];
        for ((x, g0), (mk, vk)) in theta
            .iter_mut()
            .zip(grad)
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            let g = g0 * clip_scale + 2.0 * l2 * *x;
            *mk = cfg.beta1 * *mk + (1.0 - cfg.beta1) * g;
            *vk = cfg.beta2 * *vk + (1.0 - cfg.beta2) * g * g;
            let m_hat = *mk / bc1;
            let v_hat = *vk / bc2;
            *x -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

impl EpochLog {
    /// Tab-separated line: epoch, mean_loss, train_acc, val_acc (or NA).
    pub fn tsv_line(&self) -> String {
        let mut s = String::new();
        write!(s, "{}\t{:.6}\t{:.6}\t", self.epoch, self.mean_loss, self.train_acc).unwrap();
        match self.val_acc {
            Some(v) => write!(s, "{v:.6}").unwrap(),
            None => s.push_str("NA"),
        }
        s
    }
}

/// Result of a training run: the selected parameters, the per-epoch
/// log, and which epoch the parameters came from (1-based).
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// Per-example Adam training. Each epoch shuffles by a seeded stream,
/// runs forward/backward/step per example, and logs mean loss and
/// running train accuracy. With a validation set, the parameters of the
/// best-validation-accuracy epoch are returned (earliest on ties);
/// otherwise the final parameters.
pub fn train(
    train_set: &[Prepared],
    val_set: &[Prepared],
    embeddings: &Matrix,
    model_config: &crate::model::ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model_config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Domain("training set is empty".into()));
    }
    let rng = Rng::new(cfg.seed);
    let mut params = init_params(model_config, &rng);
    let mut state = AdamState::new(&params);
    let mut grads = params.zeros_like();

    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        rng.stream(&format!("shuffle/{epoch}")).shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for &idx in &order {
            let prep = &train_set[idx];
            let trace = forward(prep, embeddings, &params)?;
            if argmax(&trace.probs) == prep.example.label.index() {
                correct += 1;
            }
            for id in grads.tensor_ids() {
                grads.tensor_mut(id).fill(0.0);
            }
            let loss = backward(&trace, prep, prep.example.label, &params, &mut grads);
            if !loss.is_finite() {
                return Err(Error::TrainingAbort(format!(
                    "non-finite loss at example {idx} (epoch {epoch})"
                )));
            }
            loss_sum += loss;
            adam_step(&mut params, &grads, &mut state, cfg)?;
        }

        let val_acc = if val_set.is_empty() {
            None
        } else {
            Some(evaluate_accuracy(val_set, embeddings, &params)?)
        };
        log.push(EpochLog {
            epoch,
            mean_loss: loss_sum / train_set.len() as f64,
            train_acc: correct as f64 / train_set.len() as f64,
            val_acc,
        });
        if let Some(acc) = val_acc {
            let improved = match &best {
                Some((best_acc, _, _)) => acc > *best_acc,
                None => true,
            };
            if improved {
                best = Some((acc, epoch, params.clone()));
            }
        }
    }
    let (params, best_epoch) = match best {
        Some((_, epoch, p)) => (p, epoch),
        None => {
            let last = log.len();
            (params, last)
        }
    };
    Ok(TrainOutcome {
        params,
        log,
        best_epoch,
    })
}

/// Fraction of examples whose argmax prediction matches the gold label.
pub fn evaluate_accuracy(
    set: &[Prepared],
    embeddings: &Matrix,
    params: &ModelParams,
) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Domain("cannot evaluate an empty set".into()));
    }
    let mut correct = 0usize;
    for prep in set {
        if predict(prep, embeddings, params)? == prep.example.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / set.len() as f64)
}

/// Gradient-check verdict for one tensor.
#[derive(Clone, Debug)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Per-tensor comparison of analytic vs central-difference gradients.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub step: f64,
    pub checks: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One line per tensor plus a verdict line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            writeln!(
                out,
                "{} {} max_rel_err={:.3e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.max_rel_err
            )
            .unwrap();
        }
        writeln!(
            out,
            "{}: {} tensors at tolerance {:.1e} (h={:.1e})",
            if self.pass() { "ALL PASS" } else { "FAILED" },
            self.checks.len(),
            self.tolerance,
            self.step
        )
        .unwrap();
        out
    }
}

/// Checks the analytic gradients of cross_entropy ∘ forward for one
/// example against central finite differences, tensor by tensor.
pub fn gradient_check(
    prep: &Prepared,
    embeddings: &Matrix,
    params: &ModelParams,
    h: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let trace = forward(prep, embeddings, params)?;
    let mut grads = params.zeros_like();
    backward(&trace, prep, prep.example.label, params, &mut grads);
    compare_grads(prep, embeddings, params, &grads, h, tolerance)
}

/// Same comparison against caller-supplied analytic gradients; lets a
/// harness inject a corrupted backward pass and watch it get named.
pub fn compare_grads(
    prep: &Prepared,
    embeddings: &Matrix,
    params: &ModelParams,
    analytic: &ModelParams,
    h: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let label = prep.example.label.index();
    let mut checks = Vec::new();
    for id in params.tensor_ids() {
        let theta = params.tensor(id).to_vec();
        let mut probe = params.clone();
        let loss = |t: &[f64]| {
            probe.tensor_mut(id).copy_from_slice(t);
            match forward(prep, embeddings, &probe) {
                Ok(trace) => crate::layers::cross_entropy(&trace.probs, label),
                Err(_) => f64::NAN,
            }
        };
        let numeric = finite_diff_grad(loss, &theta, h)?;
        let max_rel_err = grad_rel_err(analytic.tensor(id), &numeric);
        checks.push(TensorCheck {
            name: id.name(),
            max_rel_err,
            pass: max_rel_err < tolerance,
        });
    }
    Ok(GradCheckReport {
        tolerance,
        step: h,
        checks,
    })
}
