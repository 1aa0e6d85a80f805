//! Single-head graph attention over the dependency adjacency.
//!
//! For each node i with neighborhood N_i (self-loop included):
//! `e_ij = concat(W h_i, W h_j) · a`, scores pass through a LeakyReLU,
//! attention is a softmax over N_i only, and the update is
//! `h_i ← ReLU(Σ_{j∈N_i} α_ij · W h_j)`. Off-neighborhood attention is
//! identically zero by construction.

use crate::graph::AdjMatrix;
use crate::numerics::{
    axpy, dot, leaky_relu, leaky_relu_grad, relu, relu_grad, softmax_backward, softmax_stable,
    Matrix,
};
use crate::{Error, Result};

/// Attention parameters: `w` projects d_in → d_out, `a` has length
/// 2·d_out (first half scores the source node, second half the neighbor).
#[derive(Clone, Debug, PartialEq)]
pub struct GatParams {
    pub w: Matrix,
    pub a: Vec<f64>,
}

impl GatParams {
    pub fn new(w: Matrix, a: Vec<f64>) -> Result<GatParams> {
        if a.len() != 2 * w.rows() {
            return Err(Error::Shape(format!(
                "attention vector length {} must be twice the projection rows {}",
                a.len(),
                w.rows()
            )));
        }
        Ok(GatParams { w, a })
    }

    pub fn zeros(input_dim: usize, output_dim: usize) -> Self {
        Self {
            w: Matrix::zeros(output_dim, input_dim),
            a: vec![0.0; 2 * output_dim],
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
pub struct GatCache {
    h_in: Matrix,
    /// Projected nodes, row j = W h_j.
    g: Matrix,
    /// Ascending neighbor lists per node.
    neigh: Vec<Vec<usize>>,
    /// Raw scores e_ij per neighbor, before the LeakyReLU.
    e: Vec<Vec<f64>>,
    /// Attention weights per neighbor.
    alpha: Vec<Vec<f64>>,
    /// Pre-ReLU aggregates.
    z: Matrix,
    slope: f64,
}

impl GatCache {
    /// Attention row of node `i`, paired with the neighbor indices.
    pub fn attention(&self, i: usize) -> (&[usize], &[f64]) {
        (&self.neigh[i], &self.alpha[i])
    }
}

/// Forward pass; `slope` is the LeakyReLU slope for the scores.
pub fn gat_forward(
    h_in: &Matrix,
    adj: &AdjMatrix,
    p: &GatParams,
    slope: f64,
) -> Result<(Matrix, GatCache)> {
    let n = h_in.rows();
    if adj.len() != n {
        return Err(Error::Shape(format!(
            "adjacency over {} nodes does not match {} feature rows",
            adj.len(),
            n
        )));
    }
    if p.input_dim() != h_in.cols() {
        return Err(Error::Shape(format!(
            "gat projection expects width {}, got {}",
            p.input_dim(),
            h_in.cols()
        )));
    }
    let d_out = p.output_dim();
    let g = h_in.matmul(&p.w.transpose()); // row j = W h_j
    let (a_src, a_dst) = p.a.split_at(d_out);
    let u: Vec<f64> = (0..n).map(|j| dot(g.row(j), a_src)).collect();
    let v: Vec<f64> = (0..n).map(|j| dot(g.row(j), a_dst)).collect();

    let mut neigh = Vec::with_capacity(n);
    let mut e_rows = Vec::with_capacity(n);
    let mut alpha_rows = Vec::with_capacity(n);
    let mut z = Matrix::zeros(n, d_out);
    for i in 0..n {
        let ns: Vec<usize> = adj.neighbors(i).collect();
        if ns.is_empty() {
            return Err(Error::Internal(format!(
                "node {i} has no neighbors; adjacency lost its self-loops"
            )));
        }
        let e: Vec<f64> = ns.iter().map(|&j| u[i] + v[j]).collect();
        let scores: Vec<f64> = e.iter().map(|&x| leaky_relu(x, slope)).collect();
        let alpha = softmax_stable(&scores)?;
        let zi = z.row_mut(i);
        for (&j, &aij) in ns.iter().zip(&alpha) {
            axpy(aij, g.row(j), zi);
        }
        neigh.push(ns);
        e_rows.push(e);
        alpha_rows.push(alpha);
    }
    let out = z.map(relu);
    let cache = GatCache {
        h_in: h_in.clone(),
        g,
        neigh,
        e: e_rows,
        alpha: alpha_rows,
        z,
        slope,
    };
    Ok((out, cache))
}

/// Returns (parameter gradients, d(loss)/d(h_in)).
pub fn gat_backward(d_out: &Matrix, cache: &GatCache, p: &GatParams) -> (GatParams, Matrix) {
    let n = cache.h_in.rows();
    let d_o = p.output_dim();
    let (a_src, a_dst) = p.a.split_at(d_o);

    let d_z = Matrix::from_fn(n, d_o, |i, q| d_out[(i, q)] * relu_grad(cache.z[(i, q)]));

    let mut d_g = Matrix::zeros(n, d_o);
    let mut d_u = vec![0.0; n];
    let mut d_v = vec![0.0; n];
    for i in 0..n {
        let ns = &cache.neigh[i];
        let alpha = &cache.alpha[i];
        // z_i = Σ_j α_ij g_j
        let d_alpha: Vec<f64> = ns.iter().map(|&j| dot(d_z.row(i), cache.g.row(j))).collect();
        for (&j, &aij) in ns.iter().zip(alpha) {
            axpy(aij, d_z.row(i), d_g.row_mut(j));
        }
        let d_scores = softmax_backward(alpha, &d_alpha);
        for ((&j, &ds), &e) in ns.iter().zip(&d_scores).zip(&cache.e[i]) {
            let de = ds * leaky_relu_grad(e, cache.slope);
            d_u[i] += de;
            d_v[j] += de;
        }
    }
    // u_j = g_j · a_src, v_j = g_j · a_dst
    let mut grads = GatParams::zeros(p.input_dim(), d_o);
    let (ga_src, ga_dst) = grads.a.split_at_mut(d_o);
    for j in 0..n {
        axpy(d_u[j], a_src, d_g.row_mut(j));
        axpy(d_v[j], a_dst, d_g.row_mut(j));
        axpy(d_u[j], cache.g.row(j), ga_src);
        axpy(d_v[j], cache.g.row(j), ga_dst);
    }
    // g = h_in Wᵀ
    grads.w = d_g.transpose().matmul(&cache.h_in);
    let d_h = d_g.matmul(&p.w);
    (grads, d_h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::testutil::random_tree;
    use crate::graph::ParseTree;
    use crate::numerics::{finite_diff_grad, grad_rel_err, Rng};

    #[test]
    fn singleton_neighborhood_gets_full_attention() {
        // Node 1 of a 2-chain sees {0, 1}; restrict to a single node by
        // using n = 1, whose only neighbor is itself.
        let adj = AdjMatrix::linear_chain(1).unwrap();
        let h = Matrix::from_rows(&[vec![0.7, -0.2]]).unwrap();
        let p = GatParams::new(
            Matrix::from_fn(2, 2, |i, j| (i + j) as f64 * 0.3 - 0.2),
            vec![0.1, -0.4, 0.2, 0.5],
        )
        .unwrap();
        let (_, cache) = gat_forward(&h, &adj, &p, 0.2).unwrap();
        let (ns, alpha) = cache.attention(0);
        assert_eq!(ns, &[0]);
        assert_eq!(alpha, &[1.0]);
    }

    #[test]
    fn identical_neighbors_share_attention_equally() {
        // Star centered at 0 with identical leaf features: the two leaves
        // must tie; the center (different u_i contribution cancels within
        // the row) still weighs itself vs leaves by score.
        let tree = ParseTree::from_heads(&[-1, 0, 0]).unwrap();
        let adj = AdjMatrix::from_tree(&tree);
        let h = Matrix::from_rows(&[vec![0.5], vec![1.5], vec![1.5]]).unwrap();
        let p = GatParams::new(
            Matrix::from_vec(1, 1, vec![0.8]).unwrap(),
            vec![0.3, 0.6],
        )
        .unwrap();
        let (_, cache) = gat_forward(&h, &adj, &p, 0.2).unwrap();
        let (ns, alpha) = cache.attention(0);
        assert_eq!(ns, &[0, 1, 2]);
        assert!((alpha[1] - alpha[2]).abs() < 1e-15);

        // Two identical neighbors only: node 1 sees {0, 1}; make both
        // feature rows equal and attention must be [1/2, 1/2].
        let h_eq = Matrix::from_rows(&[vec![1.1], vec![1.1], vec![0.2]]).unwrap();
        let (_, cache_eq) = gat_forward(&h_eq, &adj, &p, 0.2).unwrap();
        let (ns1, alpha1) = cache_eq.attention(1);
        assert_eq!(ns1, &[0, 1]);
        assert!((alpha1[0] - 0.5).abs() < 1e-15);
        assert!((alpha1[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_scalar_case() {
        // d_in = d_out = 1, W = [1], a = [1, 1], features [1, 2, 3] on a
        // star where node 0 neighbors everyone: e_0j = 1 + g_j = [2, 3, 4],
        // α = softmax([2,3,4]), h_0 = ReLU(Σ α_j g_j) ≈ 2.5752.
        let tree = ParseTree::from_heads(&[-1, 0, 0]).unwrap();
        let adj = AdjMatrix::from_tree(&tree);
        let h = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let p = GatParams::new(Matrix::from_vec(1, 1, vec![1.0]).unwrap(), vec![1.0, 1.0])
            .unwrap();
        let (out, cache) = gat_forward(&h, &adj, &p, 0.2).unwrap();
        let (_, alpha) = cache.attention(0);
        assert!((alpha[0] - 0.0900).abs() < 5e-5);
        assert!((alpha[1] - 0.2447).abs() < 5e-5);
        assert!((alpha[2] - 0.6652).abs() < 5e-5);
        assert!((out[(0, 0)] - 2.5752).abs() < 5e-4);
    }

    #[test]
    fn attention_rows_normalize_and_vanish_off_neighborhood() {
        let mut rng = Rng::new(55);
        for _ in 0..200 {
            let n = 1 + rng.below(12);
            let tree = random_tree(n, &mut rng);
            let adj = AdjMatrix::from_tree(&tree);
            let d_in = 1 + rng.below(4);
            let d_out = 1 + rng.below(4);
            let h = Matrix::from_fn(n, d_in, |_, _| rng.uniform(-2.0, 2.0));
            let p = GatParams::new(
                Matrix::from_fn(d_out, d_in, |_, _| rng.uniform(-1.0, 1.0)),
                (0..2 * d_out).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            )
            .unwrap();
            let (_, cache) = gat_forward(&h, &adj, &p, 0.2).unwrap();
            for i in 0..n {
                let (ns, alpha) = cache.attention(i);
                let sum: f64 = alpha.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                let neighbor_set: Vec<usize> = adj.neighbors(i).collect();
                assert_eq!(ns, neighbor_set.as_slice());
            }
        }
    }

    #[test]
    fn permuting_nodes_permutes_outputs() {
        let mut rng = Rng::new(6);
        for _ in 0..50 {
            let n = 2 + rng.below(4);
            let tree = random_tree(n, &mut rng);
            let adj = AdjMatrix::from_tree(&tree);
            let h = Matrix::from_fn(n, 2, |_, _| rng.uniform(-1.0, 1.0));
            let p = GatParams::new(
                Matrix::from_fn(3, 2, |_, _| rng.uniform(-1.0, 1.0)),
                (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            )
            .unwrap();
            let (out, _) = gat_forward(&h, &adj, &p, 0.2).unwrap();

            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let mut heads_p = vec![0i64; n];
            let mut inv = vec![0usize; n];
            for (new, &old) in perm.iter().enumerate() {
                inv[old] = new;
            }
            for (old, &hd) in tree.heads().iter().enumerate() {
                heads_p[inv[old]] = if hd == -1 { -1 } else { inv[hd as usize] as i64 };
            }
            let tree_p = ParseTree::from_heads(&heads_p).unwrap();
            let adj_p = AdjMatrix::from_tree(&tree_p);
            let h_p = Matrix::from_fn(n, 2, |i, j| h[(perm[i], j)]);
            // adj_p[(i,j)] must equal adj[(perm i, perm j)] for the relabeled tree.
            let (out_p, _) = gat_forward(&h_p, &adj_p, &p, 0.2).unwrap();
            for i in 0..n {
                for q in 0..3 {
                    assert!((out_p[(inv[i], q)] - out[(i, q)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(61);
        for trial in 0..20 {
            let n = 1 + rng.below(5);
            let d_in = 1 + rng.below(3);
            let d_out = 1 + rng.below(3);
            let tree = random_tree(n, &mut rng);
            let adj = AdjMatrix::from_tree(&tree);
            let weights: Vec<f64> = (0..n * d_out).map(|_| rng.uniform(-1.0, 1.0)).collect();

            let w_len = d_out * d_in;
            let theta: Vec<f64> = (0..w_len + 2 * d_out + n * d_in)
                .map(|_| rng.uniform(-1.0, 1.0))
                .collect();
            let unpack = |t: &[f64]| {
                let w = Matrix::from_vec(d_out, d_in, t[..w_len].to_vec()).unwrap();
                let a = t[w_len..w_len + 2 * d_out].to_vec();
                let h = Matrix::from_vec(n, d_in, t[w_len + 2 * d_out..].to_vec()).unwrap();
                (GatParams::new(w, a).unwrap(), h)
            };
            let loss = |t: &[f64]| {
                let (p, h) = unpack(t);
                let (out, _) = gat_forward(&h, &adj, &p, 0.2).unwrap();
                dot(out.data(), &weights)
            };

            let (p, h) = unpack(&theta);
            let (_, cache) = gat_forward(&h, &adj, &p, 0.2).unwrap();
            let d_out_mat = Matrix::from_vec(n, d_out, weights.clone()).unwrap();
            let (grads, d_h) = gat_backward(&d_out_mat, &cache, &p);
            let mut analytic = grads.w.data().to_vec();
            analytic.extend(&grads.a);
            analytic.extend(d_h.data());

            let numeric = finite_diff_grad(loss, &theta, 1e-5).unwrap();
            let err = grad_rel_err(&analytic, &numeric);
            assert!(err < 1e-4, "trial {trial}: rel err {err}");
        }
    }
}
