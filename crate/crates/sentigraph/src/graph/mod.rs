//! Dependency structure of a sentence and its 0/1 graph form.
//!
//! Parses arrive from external files as per-token head arrays (this
//! crate never runs a parser). A validated [`ParseTree`] turns into a
//! symmetric [`AdjMatrix`] with self-loops, which grounds the graph
//! attention and graph convolution layers.

mod parse_io;

pub use parse_io::{read_parses, read_parses_str};

use crate::numerics::Matrix;
use crate::{Error, Result};

/// Dependency tree over `n` tokens: one head index per token, −1 at the
/// single root, acyclic by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseTree {
    heads: Vec<i64>,
}

impl ParseTree {
    /// Validates a head array: rejects empty input, zero or multiple
    /// roots, out-of-range indices, and cycles.
    pub fn from_heads(heads: &[i64]) -> Result<ParseTree> {
        let n = heads.len();
        if n == 0 {
            return Err(Error::Format {
                line: 0,
                msg: "empty head list".into(),
            });
        }
        let roots = heads.iter().filter(|&&h| h == -1).count();
        if roots != 1 {
            return Err(Error::Format {
                line: 0,
                msg: format!("expected exactly one root, found {roots}"),
            });
        }
        for (i, &h) in heads.iter().enumerate() {
            if h < -1 || h >= n as i64 {
                return Err(Error::Format {
                    line: 0,
                    msg: format!("head index {h} of token {i} out of range [-1, {n})"),
                });
            }
            if h == i as i64 {
                return Err(Error::Format {
                    line: 0,
                    msg: format!("token {i} is its own head"),
                });
            }
        }
        // Walking up from any node must reach the root within n steps.
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while heads[cur] != -1 {
                cur = heads[cur] as usize;
                steps += 1;
                if steps > n {
                    return Err(Error::Format {
                        line: 0,
                        msg: format!("cycle detected walking up from token {start}"),
                    });
                }
            }
        }
        Ok(ParseTree {
            heads: heads.to_vec(),
        })
    }

    /// Path tree 0–1–…–(n−1), used when no parse is supplied.
    pub fn linear_chain(n: usize) -> Result<ParseTree> {
        if n == 0 {
            return Err(Error::Domain("linear chain of zero tokens".into()));
        }
        let heads: Vec<i64> = (0..n).map(|i| i as i64 - 1).collect();
        Ok(ParseTree { heads })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a validated tree has at least one token
    }

    pub fn heads(&self) -> &[i64] {
        &self.heads
    }

    pub fn root(&self) -> usize {
        self.heads.iter().position(|&h| h == -1).expect("validated")
    }
}

/// Symmetric 0/1 adjacency with unit diagonal.
///
/// Edges are undirected and every node carries a self-loop, so for a
/// tree over `n` tokens the off-diagonal ones number exactly `2(n−1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjMatrix {
    n: usize,
    m: Matrix,
}

impl AdjMatrix {
    /// `A[i][j] = A[j][i] = 1` iff one of i, j heads the other; unit diagonal.
    pub fn from_tree(tree: &ParseTree) -> AdjMatrix {
        let n = tree.len();
        let mut m = Matrix::identity(n);
        for (i, &h) in tree.heads().iter().enumerate() {
            if h >= 0 {
                let h = h as usize;
                m[(i, h)] = 1.0;
                m[(h, i)] = 1.0;
            }
        }
        AdjMatrix { n, m }
    }

    /// Adjacency of the path graph plus self-loops.
    pub fn linear_chain(n: usize) -> Result<AdjMatrix> {
        Ok(Self::from_tree(&ParseTree::linear_chain(n)?))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    /// Neighborhood of `i` (self included), ascending.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let row = self.m.row(i);
        (0..self.n).filter(move |&j| row[j] != 0.0)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// Mean-aggregation variant: each row divided by its degree
    /// (self-loop included). Off by default; the raw 0/1 matrix is the
    /// reference behavior.
    pub fn mean_normalized(&self) -> Matrix {
        let mut m = self.m.clone();
        for i in 0..self.n {
            let deg = self.degree(i) as f64;
            for v in m.row_mut(i) {
                *v /= deg;
            }
        }
        m
    }
}
