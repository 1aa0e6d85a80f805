//! Dense matrix kernels, activations, numerically stable softmax, seeded
//! randomness, and the finite-difference oracle every differentiable
//! block in this crate is verified against.

mod finitediff;
mod matrix;
mod rng;

pub use finitediff::{finite_diff_grad, grad_rel_err};
pub use matrix::{axpy, dot, Matrix};
pub use rng::{fnv1a64, Rng};

use crate::{Error, Result};

/// Numerically stable softmax: shifts by the maximum before
/// exponentiating, so arbitrarily large (finite) inputs cannot overflow.
pub fn softmax_stable(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Domain("softmax of an empty vector".into()));
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::Domain(
            "softmax input contains a non-finite value".into(),
        ));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Backward pass through softmax: maps d(loss)/d(probs) to
/// d(loss)/d(logits) via `dz_j = p_j (dp_j − Σ_k dp_k p_k)`.
pub fn softmax_backward(probs: &[f64], d_probs: &[f64]) -> Vec<f64> {
    let inner = dot(d_probs, probs);
    probs
        .iter()
        .zip(d_probs)
        .map(|(&p, &dp)| p * (dp - inner))
        .collect()
}

/// `x` for `x >= 0`, `slope * x` otherwise. `slope` must lie in (0, 1).
pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    debug_assert!(slope > 0.0 && slope < 1.0);
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

/// Derivative of `leaky_relu`; the subgradient at 0 is taken as 1.
pub fn leaky_relu_grad(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        slope
    }
}

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Derivative of `relu`; the subgradient at 0 is taken as 0.
pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    assert!(!xs.is_empty(), "argmax of an empty slice");
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
