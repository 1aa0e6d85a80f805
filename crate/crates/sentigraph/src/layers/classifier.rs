//! Final linear layer + softmax over the 3 polarity classes, and the
//! cross-entropy loss.

use crate::numerics::{softmax_backward, softmax_stable, Matrix};
use crate::Result;

/// Probability floor applied before the log in the loss.
pub const PROB_FLOOR: f64 = 1e-12;

/// Weights of the final fully connected layer: `w` is 3 × d, `b` is 3.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl ClassifierParams {
    pub fn zeros(input_dim: usize) -> Self {
        Self {
            w: Matrix::zeros(3, input_dim),
            b: vec![0.0; 3],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }
}

#[derive(Clone, Debug)]
pub struct ClassifierCache {
    input: Vec<f64>,
    probs: Vec<f64>,
}

/// `softmax(W r + b)`; sums to 1.
pub fn classify(r: &[f64], p: &ClassifierParams) -> Result<(Vec<f64>, ClassifierCache)> {
    let mut logits = p.w.matvec(r);
    for (l, b) in logits.iter_mut().zip(&p.b) {
        *l += b;
    }
    let probs = softmax_stable(&logits)?;
    let cache = ClassifierCache {
        input: r.to_vec(),
        probs: probs.clone(),
    };
    Ok((probs, cache))
}

/// Gradients of the classifier given d(loss)/d(probs); returns
/// (parameter gradients, d(loss)/d(input)).
pub fn classify_backward(
    d_probs: &[f64],
    cache: &ClassifierCache,
    p: &ClassifierParams,
) -> (ClassifierParams, Vec<f64>) {
    let dz = softmax_backward(&cache.probs, d_probs);
    let mut grads = ClassifierParams::zeros(p.input_dim());
    grads.w.add_outer(&dz, &cache.input);
    grads.b.copy_from_slice(&dz);
    let d_input = p.w.tr_matvec(&dz);
    (grads, d_input)
}

/// `−ln(probs[label])` with the probability clamped below at
/// [`PROB_FLOOR`] before the log.
pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    debug_assert!(label < probs.len());
    -probs[label].max(PROB_FLOOR).ln()
}

/// d(loss)/d(probs); zero at entries pinned by the clamp.
pub fn cross_entropy_backward(probs: &[f64], label: usize) -> Vec<f64> {
    let mut d = vec![0.0; probs.len()];
    if probs[label] >= PROB_FLOOR {
        d[label] = -1.0 / probs[label];
    }
    d
}

/// Convenience for the common fused case: d(loss)/d(logits) of
/// cross_entropy ∘ softmax is `probs − onehot(label)`. Used only by
/// tests as an independent identity; the layer path composes the two
/// backward passes above.
pub fn softmax_ce_logit_grad(probs: &[f64], label: usize) -> Vec<f64> {
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == label { p - 1.0 } else { p })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{argmax, dot, finite_diff_grad, grad_rel_err, Rng};

    #[test]
    fn zero_params_give_uniform() {
        let p = ClassifierParams::zeros(4);
        let (probs, _) = classify(&[0.3, -1.0, 2.0, 0.0], &p).unwrap();
        for v in &probs {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dominant_bias_wins() {
        let mut p = ClassifierParams::zeros(2);
        p.b = vec![10.0, 0.0, 0.0];
        let (probs, _) = classify(&[1.0, -1.0], &p).unwrap();
        assert_eq!(argmax(&probs), 0);
    }

    #[test]
    fn matches_direct_logit_evaluation() {
        let mut rng = Rng::new(21);
        let mut p = ClassifierParams::zeros(3);
        for v in p.w.data_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        for v in &mut p.b {
            *v = rng.uniform(-1.0, 1.0);
        }
        let r = [0.5, -0.25, 1.5];
        let mut logits = [0.0; 3];
        for c in 0..3 {
            logits[c] = p.b[c] + dot(p.w.row(c), &r);
        }
        let direct = softmax_stable(&logits).unwrap();
        let (probs, _) = classify(&r, &p).unwrap();
        for (a, b) in probs.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-15);
        }
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_values() {
        let third = 1.0 / 3.0;
        assert!((cross_entropy(&[third, third, third], 2) - 3.0f64.ln()).abs() < 1e-12);
        assert_eq!(cross_entropy(&[0.0, 1.0, 0.0], 1), 0.0);
        assert!((cross_entropy(&[0.7, 0.2, 0.1], 1) - -(0.2f64.ln())).abs() < 1e-12);
        // Clamp keeps the loss finite at zero probability.
        assert!(cross_entropy(&[1.0, 0.0, 0.0], 1).is_finite());
    }

    #[test]
    fn softmax_ce_identity_at_zero_params() {
        // With W=0, b=0 the probs are uniform and d(loss)/d(b) must equal
        // probs − onehot(label).
        let p = ClassifierParams::zeros(2);
        let label = 1usize;
        let (probs, cache) = classify(&[0.4, -0.4], &p).unwrap();
        let d_probs = cross_entropy_backward(&probs, label);
        let (grads, _) = classify_backward(&d_probs, &cache, &p);
        let expect = softmax_ce_logit_grad(&probs, label);
        for (a, b) in grads.b.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(77);
        for trial in 0..20 {
            let d = 2 + rng.below(6);
            let label = rng.below(3);
            let r: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let mut theta: Vec<f64> = (0..3 * d + 3).map(|_| rng.uniform(-1.0, 1.0)).collect();
            theta.extend(r.iter().copied());

            let unpack = |t: &[f64]| {
                let w = Matrix::from_vec(3, d, t[..3 * d].to_vec()).unwrap();
                let b = t[3 * d..3 * d + 3].to_vec();
                let input = t[3 * d + 3..].to_vec();
                (ClassifierParams { w, b }, input)
            };
            let loss = |t: &[f64]| {
                let (p, input) = unpack(t);
                let (probs, _) = classify(&input, &p).unwrap();
                cross_entropy(&probs, label)
            };

            let (p, input) = unpack(&theta);
            let (probs, cache) = classify(&input, &p).unwrap();
            let d_probs = cross_entropy_backward(&probs, label);
            let (grads, d_input) = classify_backward(&d_probs, &cache, &p);
            let mut analytic = grads.w.data().to_vec();
            analytic.extend(&grads.b);
            analytic.extend(&d_input);

            let numeric = finite_diff_grad(loss, &theta, 1e-5).unwrap();
            let err = grad_rel_err(&analytic, &numeric);
            assert!(err < 1e-4, "trial {trial}: rel err {err}");
        }
    }
}
