//! Graph convolution: `h_i = ReLU(Σ_{j∈N_i} A_ij · W h_j + b)`.
//!
//! The per-entry accumulation order is pinned: ascending j over the
//! nonzero A_ij, each term `A_ij · (W h_j)` with its inner dot in
//! ascending k, the bias added after the sum. Outputs are bit-identical
//! to a dense triple loop written in that order.

use crate::numerics::{relu, relu_grad, Matrix};
use crate::Result;

/// One convolution layer: `w` is d_out × d_in, `b` is d_out.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnParams {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl GcnParams {
    pub fn zeros(input_dim: usize, output_dim: usize) -> Self {
        Self {
            w: Matrix::zeros(output_dim, input_dim),
            b: vec![0.0; output_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }
}

#[derive(Clone, Debug)]
pub struct GcnCache {
    h_in: Matrix,
    adj: Matrix,
    /// Pre-ReLU activations.
    z: Matrix,
}

/// Forward pass. `adj` is the n×n aggregation weight matrix: the raw
/// 0/1 adjacency by default, or its degree-normalized variant when mean
/// aggregation is enabled.
pub fn gcn_forward(h_in: &Matrix, adj: &Matrix, p: &GcnParams) -> Result<(Matrix, GcnCache)> {
    let n = h_in.rows();
    assert_eq!(adj.shape(), (n, n), "adjacency must be n x n");
    assert_eq!(p.input_dim(), h_in.cols(), "gcn input width mismatch");
    let d_out = p.output_dim();

    // projected[j] = W h_j, computed once per node; each entry carries
    // the same bits as the dot product in the reference triple loop.
    let projected = h_in.matmul(&p.w.transpose());

    let mut z = Matrix::zeros(n, d_out);
    for i in 0..n {
        for q in 0..d_out {
            let mut acc = 0.0;
            for j in 0..n {
                let a = adj[(i, j)];
                if a != 0.0 {
                    acc += a * projected[(j, q)];
                }
            }
            z[(i, q)] = acc + p.b[q];
        }
    }
    let out = z.map(relu);
    let cache = GcnCache {
        h_in: h_in.clone(),
        adj: adj.clone(),
        z,
    };
    Ok((out, cache))
}

/// Returns (parameter gradients, d(loss)/d(h_in)).
pub fn gcn_backward(d_out: &Matrix, cache: &GcnCache, p: &GcnParams) -> (GcnParams, Matrix) {
    let d_z = Matrix::from_fn(d_out.rows(), d_out.cols(), |i, q| {
        d_out[(i, q)] * relu_grad(cache.z[(i, q)])
    });

    // z = (A H) Wᵀ + b
    let aggregated = cache.adj.matmul(&cache.h_in); // n × d_in
    let mut grads = GcnParams::zeros(p.input_dim(), p.output_dim());
    grads.w = d_z.transpose().matmul(&aggregated);
    for i in 0..d_z.rows() {
        for (q, g) in grads.b.iter_mut().enumerate() {
            *g += d_z[(i, q)];
        }
    }
    let d_h = cache.adj.transpose().matmul(&d_z.matmul(&p.w));
    (grads, d_h)
}
