//! Pretrained word-vector loading.
//!
//! The file format is one vector per line: a word followed by `dim`
//! whitespace-separated decimal floats. Vocabulary words absent from the
//! file are initialized uniform(−0.25, 0.25) from the seeded generator;
//! the padding row stays all-zero. The word table is frozen during
//! training.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{Vocab, PAD_ID};
use crate::numerics::{Matrix, Rng};
use crate::{Error, Result};

/// Loaded word table plus in-file coverage counts.
#[derive(Clone, Debug)]
pub struct EmbeddingLoad {
    /// |V| × dim table, row index = vocabulary id.
    pub table: Matrix,
    /// Vocabulary words (excluding pad/unk) found in the file.
    pub found: usize,
    /// Vocabulary words (excluding pad/unk) that fell back to random init.
    pub missing: usize,
}

impl EmbeddingLoad {
    /// found / (|V| − 2), in [0, 1]; 1.0 for an empty vocabulary.
    pub fn coverage(&self) -> f64 {
        let total = self.found + self.missing;
        if total == 0 {
            1.0
        } else {
            self.found as f64 / total as f64
        }
    }
}

/// Reads vectors for `vocab` from `path`.
pub fn load_embeddings(path: &Path, vocab: &Vocab, dim: usize, rng: &Rng) -> Result<EmbeddingLoad> {
    load_embeddings_str(&fs::read_to_string(path)?, vocab, dim, rng)
}

/// Reads vectors for `vocab` from text.
pub fn load_embeddings_str(
    text: &str,
    vocab: &Vocab,
    dim: usize,
    rng: &Rng,
) -> Result<EmbeddingLoad> {
    let mut in_file: HashMap<&str, Vec<f64>> = HashMap::new();
    let mut any_line = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        any_line = true;
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line has a first field");
        let mut vec = Vec::with_capacity(dim);
        for field in fields {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::format(lineno, format!("unparseable float {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::format(lineno, format!("non-finite value {field:?}")));
            }
            vec.push(v);
        }
        if vec.len() != dim {
            return Err(Error::format(
                lineno,
                format!("expected {dim} values, found {}", vec.len()),
            ));
        }
        if vocab.contains(word) {
            in_file.insert(word, vec);
        }
    }
    if !any_line {
        return Err(Error::format(0, "empty embedding file"));
    }
    Ok(build_table(vocab, dim, rng, &in_file))
}

/// Fully random table for runs without a pretrained file: every word
/// (and unk) uniform(−0.25, 0.25), padding all-zero.
pub fn random_embeddings(vocab: &Vocab, dim: usize, rng: &Rng) -> Matrix {
    build_table(vocab, dim, rng, &HashMap::new()).table
}

fn build_table(
    vocab: &Vocab,
    dim: usize,
    rng: &Rng,
    in_file: &HashMap<&str, Vec<f64>>,
) -> EmbeddingLoad {
    let mut oov = rng.stream("embeddings/oov");
    let mut table = Matrix::zeros(vocab.len(), dim);
    let mut found = 0;
    let mut missing = 0;
    for id in 0..vocab.len() {
        if id == PAD_ID {
            continue; // all-zero row
        }
        let word = vocab.word(id);
        if let Some(vec) = in_file.get(word) {
            table.row_mut(id).copy_from_slice(vec);
            if id >= super::FIRST_WORD_ID {
                found += 1;
            }
        } else {
            for v in table.row_mut(id) {
                *v = oov.uniform(-0.25, 0.25);
            }
            if id >= super::FIRST_WORD_ID {
                missing += 1;
            }
        }
    }
    EmbeddingLoad {
        table,
        found,
        missing,
    }
}
