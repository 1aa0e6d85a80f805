//! Aspect-level sentiment classification over dependency-parse graphs.
//!
//! A tokenized sentence with a marked aspect span is paired with its
//! dependency parse. The parse becomes a symmetric adjacency matrix;
//! word vectors concatenated with aspect-distance embeddings feed a
//! BiLSTM; one graph-attention step and a stack of graph convolutions
//! extract syntax-aware node features; an aspect-focused retrieval
//! attention pools the sequence into a single vector that a softmax
//! layer maps to a 3-class polarity distribution.
//!
//! Every differentiable block ships an analytic backward pass and is
//! checked against a central finite-difference oracle
//! ([`numerics::finite_diff_grad`]).

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod features;
pub mod graph;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
