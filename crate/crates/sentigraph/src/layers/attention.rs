//! Aspect masking and the retrieval attention that pools BiLSTM states
//! into a single sentence representation.
//!
//! Scores come from dot products between every context state and the
//! aspect rows of the masked graph features:
//! `β_t = Σ_{i∈span} H[t]·G[i]`, `α = softmax(β)`, `r = Σ_t α_t H[t]`.

use crate::numerics::{axpy, dot, softmax_backward, softmax_stable, Matrix};
use crate::{Error, Result};

/// Rows outside `[start, end)` zeroed; rows inside copied. Idempotent.
pub fn aspect_mask(h: &Matrix, start: usize, end: usize) -> Matrix {
    debug_assert!(start < end && end <= h.rows());
    Matrix::from_fn(h.rows(), h.cols(), |i, j| {
        if i >= start && i < end {
            h[(i, j)]
        } else {
            0.0
        }
    })
}

/// The mask is a fixed projection, so its backward pass applies the same
/// zeroing to the upstream gradient.
pub fn aspect_mask_backward(d_out: &Matrix, start: usize, end: usize) -> Matrix {
    aspect_mask(d_out, start, end)
}

#[derive(Clone, Debug)]
pub struct AttentionCache {
    h: Matrix,
    /// Σ of the masked graph rows over the aspect span.
    aspect_sum: Vec<f64>,
    alpha: Vec<f64>,
    span: (usize, usize),
}

impl AttentionCache {
    /// Attention weights over the tokens (a convex combination).
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

/// Pools `h` (n×d) into a d-vector using aspect-focused dot-product
/// scores against `g_masked` (n×d, zero outside the span).
pub fn retrieval_attention(
    h: &Matrix,
    g_masked: &Matrix,
    start: usize,
    end: usize,
) -> Result<(Vec<f64>, AttentionCache)> {
    if h.cols() != g_masked.cols() {
        return Err(Error::Shape(format!(
            "retrieval attention width mismatch: {} vs {}",
            h.cols(),
            g_masked.cols()
        )));
    }
    if h.rows() != g_masked.rows() {
        return Err(Error::Shape(format!(
            "retrieval attention row mismatch: {} vs {}",
            h.rows(),
            g_masked.rows()
        )));
    }
    if start >= end || end > h.rows() {
        return Err(Error::Domain(format!(
            "aspect span [{start}, {end}) invalid for {} rows",
            h.rows()
        )));
    }
    let d = h.cols();
    let mut aspect_sum = vec![0.0; d];
    for i in start..end {
        axpy(1.0, g_masked.row(i), &mut aspect_sum);
    }
    let beta: Vec<f64> = (0..h.rows()).map(|t| dot(h.row(t), &aspect_sum)).collect();
    let alpha = softmax_stable(&beta)?;
    let mut r = vec![0.0; d];
    for (t, &a) in alpha.iter().enumerate() {
        axpy(a, h.row(t), &mut r);
    }
    let cache = AttentionCache {
        h: h.clone(),
        aspect_sum,
        alpha: alpha.clone(),
        span: (start, end),
    };
    Ok((r, cache))
}

/// Returns (d(loss)/d(h), d(loss)/d(g_masked)).
pub fn retrieval_attention_backward(d_r: &[f64], cache: &AttentionCache) -> (Matrix, Matrix) {
    let n = cache.h.rows();
    let d = cache.h.cols();
    let (start, end) = cache.span;

    // r = Σ_t α_t h_t and β_t = h_t · s with s the aspect sum.
    let d_alpha: Vec<f64> = (0..n).map(|t| dot(cache.h.row(t), d_r)).collect();
    let d_beta = softmax_backward(&cache.alpha, &d_alpha);

    let mut d_h = Matrix::zeros(n, d);
    let mut d_s = vec![0.0; d];
    for t in 0..n {
        let row = d_h.row_mut(t);
        axpy(cache.alpha[t], d_r, row);
        axpy(d_beta[t], &cache.aspect_sum, row);
        axpy(d_beta[t], cache.h.row(t), &mut d_s);
    }
    let mut d_g = Matrix::zeros(n, d);
    for i in start..end {
        d_g.row_mut(i).copy_from_slice(&d_s);
    }
    (d_h, d_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, grad_rel_err, Rng};

    #[test]
    fn mask_zeroes_rows_and_is_idempotent() {
        let h = Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 + 1.0);
        let m = aspect_mask(&h, 1, 2);
        assert_eq!(m.row(0), &[0.0, 0.0]);
        assert_eq!(m.row(1), h.row(1));
        assert_eq!(m.row(2), &[0.0, 0.0]);
        assert_eq!(aspect_mask(&m, 1, 2), m);
        // A span covering all rows is the identity.
        assert_eq!(aspect_mask(&h, 0, 3), h);
    }

    #[test]
    fn equal_scores_give_column_mean() {
        // g rows identical within the span + identical h rows => uniform α.
        let h = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let g = Matrix::zeros(3, 2); // all β = 0
        let (r, cache) = retrieval_attention(&h, &g, 0, 1).unwrap();
        for a in cache.alpha() {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((r[0] - 3.0).abs() < 1e-12);
        assert!((r[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_row_passes_through() {
        let h = Matrix::from_rows(&[vec![0.5, -1.5]]).unwrap();
        let g = Matrix::from_rows(&[vec![2.0, 3.0]]).unwrap();
        let (r, cache) = retrieval_attention(&h, &g, 0, 1).unwrap();
        assert_eq!(cache.alpha(), &[1.0]);
        assert_eq!(r, vec![0.5, -1.5]);
    }

    #[test]
    fn log_scores_give_rational_attention() {
        // β = [0, ln2, ln4] => α = [1/7, 2/7, 4/7].
        let h =
            Matrix::from_rows(&[vec![0.0], vec![2.0f64.ln()], vec![4.0f64.ln()]]).unwrap();
        let g = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]).unwrap();
        let (_, cache) = retrieval_attention(&h, &g, 0, 1).unwrap();
        let alpha = cache.alpha();
        assert!((alpha[0] - 1.0 / 7.0).abs() < 1e-12);
        assert!((alpha[1] - 2.0 / 7.0).abs() < 1e-12);
        assert!((alpha[2] - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn width_mismatch_is_a_shape_error() {
        let h = Matrix::zeros(2, 3);
        let g = Matrix::zeros(2, 4);
        assert!(matches!(
            retrieval_attention(&h, &g, 0, 1),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn output_stays_in_convex_hull_of_rows() {
        // For 1-d rows the convex hull is just [min, max].
        let mut rng = Rng::new(123);
        for _ in 0..200 {
            let n = 1 + rng.below(6);
            let h = Matrix::from_fn(n, 1, |_, _| rng.uniform(-2.0, 2.0));
            let g = Matrix::from_fn(n, 1, |_, _| rng.uniform(-2.0, 2.0));
            let e = 1 + rng.below(n);
            let s = rng.below(e);
            let g = aspect_mask(&g, s, e);
            let (r, cache) = retrieval_attention(&h, &g, s, e).unwrap();
            let lo = (0..n).map(|t| h[(t, 0)]).fold(f64::INFINITY, f64::min);
            let hi = (0..n).map(|t| h[(t, 0)]).fold(f64::NEG_INFINITY, f64::max);
            assert!(r[0] >= lo - 1e-12 && r[0] <= hi + 1e-12);
            let sum: f64 = cache.alpha().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(31);
        for trial in 0..20 {
            let n = 1 + rng.below(5);
            let d = 1 + rng.below(4);
            let e = 1 + rng.below(n);
            let s = rng.below(e);
            let weights: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let theta: Vec<f64> = (0..2 * n * d).map(|_| rng.uniform(-1.0, 1.0)).collect();

            let loss = |t: &[f64]| {
                let h = Matrix::from_vec(n, d, t[..n * d].to_vec()).unwrap();
                let g_raw = Matrix::from_vec(n, d, t[n * d..].to_vec()).unwrap();
                let g = aspect_mask(&g_raw, s, e);
                let (r, _) = retrieval_attention(&h, &g, s, e).unwrap();
                dot(&r, &weights)
            };

            let h = Matrix::from_vec(n, d, theta[..n * d].to_vec()).unwrap();
            let g_raw = Matrix::from_vec(n, d, theta[n * d..].to_vec()).unwrap();
            let g = aspect_mask(&g_raw, s, e);
            let (_, cache) = retrieval_attention(&h, &g, s, e).unwrap();
            let (d_h, d_g_masked) = retrieval_attention_backward(&weights, &cache);
            let d_g = aspect_mask_backward(&d_g_masked, s, e);
            let mut analytic = d_h.data().to_vec();
            analytic.extend(d_g.data());

            let numeric = finite_diff_grad(loss, &theta, 1e-5).unwrap();
            let err = grad_rel_err(&analytic, &numeric);
            assert!(err < 1e-4, "trial {trial}: rel err {err}");
        }
    }
}
