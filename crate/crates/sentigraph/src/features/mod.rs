//! Vocabulary, word vectors, aspect-relative position features, and the
//! composition of per-token input rows (word vector ‖ position vector).

mod embeddings;
mod tokenize;

pub use embeddings::{load_embeddings, load_embeddings_str, random_embeddings, EmbeddingLoad};
pub use tokenize::{align_span, tokenize, tokenize_words, Token};

use std::collections::HashMap;
use std::fmt;

use crate::numerics::{fnv1a64, Matrix};
use crate::{Error, Result};

/// Reserved vocabulary id for padding; its word vector stays all-zero.
pub const PAD_ID: usize = 0;
/// Reserved vocabulary id for out-of-vocabulary tokens.
pub const UNK_ID: usize = 1;
/// First id handed to a real corpus word.
pub const FIRST_WORD_ID: usize = 2;

/// 3-class sentiment polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Negative, Polarity::Neutral, Polarity::Positive];

    pub fn index(self) -> usize {
        match self {
            Polarity::Negative => 0,
            Polarity::Neutral => 1,
            Polarity::Positive => 2,
        }
    }

    pub fn from_index(i: usize) -> Result<Polarity> {
        Polarity::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Domain(format!("polarity index {i} out of range")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
            Polarity::Positive => "positive",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A tokenized sentence, the half-open token range of its aspect term,
/// and the gold polarity. The unit of training and evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    tokens: Vec<String>,
    aspect_start: usize,
    aspect_end: usize,
    pub label: Polarity,
}

impl Example {
    pub fn new(
        tokens: Vec<String>,
        aspect_start: usize,
        aspect_end: usize,
        label: Polarity,
    ) -> Result<Example> {
        if aspect_start >= aspect_end || aspect_end > tokens.len() {
            return Err(Error::Domain(format!(
                "aspect span [{aspect_start}, {aspect_end}) invalid for {} tokens",
                tokens.len()
            )));
        }
        Ok(Example {
            tokens,
            aspect_start,
            aspect_end,
            label,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Half-open token range of the aspect term.
    pub fn aspect_span(&self) -> (usize, usize) {
        (self.aspect_start, self.aspect_end)
    }
}

/// Bijective word ↔ id map with reserved padding and unknown slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    by_word: HashMap<String, usize>,
    words: Vec<String>,
}

impl Vocab {
    /// Assigns ids ≥ 2 to distinct corpus tokens in first-occurrence order.
    pub fn build(corpus: &[Example]) -> Result<Vocab> {
        if corpus.is_empty() {
            return Err(Error::Domain("cannot build a vocabulary from an empty corpus".into()));
        }
        let mut vocab = Vocab::empty();
        for example in corpus {
            for token in example.tokens() {
                vocab.intern(token);
            }
        }
        Ok(vocab)
    }

    fn empty() -> Vocab {
        let words = vec!["<pad>".to_string(), "<unk>".to_string()];
        let by_word = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocab { by_word, words }
    }

    fn intern(&mut self, word: &str) -> usize {
        if let Some(&id) = self.by_word.get(word) {
            return id;
        }
        let id = self.words.len();
        self.words.push(word.to_string());
        self.by_word.insert(word.to_string(), id);
        id
    }

    /// Id of `word`, falling back to [`UNK_ID`].
    pub fn id(&self, word: &str) -> usize {
        self.by_word.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.by_word.contains_key(word)
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    /// Total entries including the two reserved ids.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false // reserved entries are always present
    }

    /// Stable content hash over the real words, used to tie checkpoints
    /// to the vocabulary they were trained with.
    pub fn hash(&self) -> u64 {
        let joined = self.words[FIRST_WORD_ID..].join("\n");
        fnv1a64(joined.as_bytes())
    }

    /// One real word per line, id order; reserved ids are implicit.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.words[FIRST_WORD_ID..] {
            out.push_str(w);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Vocab> {
        let mut vocab = Vocab::empty();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                return Err(Error::format(idx + 1, "empty vocabulary entry"));
            }
            if vocab.contains(line) {
                return Err(Error::format(idx + 1, format!("duplicate word {line:?}")));
            }
            vocab.intern(line);
        }
        Ok(vocab)
    }

    /// Token ids for an example, unknown words mapping to [`UNK_ID`].
    pub fn ids(&self, example: &Example) -> Vec<usize> {
        example.tokens().iter().map(|t| self.id(t)).collect()
    }
}

/// Clipped distance of every token to the nearest aspect-span endpoint:
/// 0 on the span itself, `min(|i − s|, |i − (e−1)|)` elsewhere, capped
/// at `d_max`.
pub fn relative_distance(example: &Example, d_max: usize) -> Vec<usize> {
    let (s, e) = example.aspect_span();
    (0..example.len())
        .map(|i| {
            if i >= s && i < e {
                0
            } else {
                let to_start = i.abs_diff(s);
                let to_end = i.abs_diff(e - 1);
                to_start.min(to_end).min(d_max)
            }
        })
        .collect()
}

/// Row i = word vector of token i ‖ position vector of its clipped
/// distance. Output is `n × (emb dim + position dim)`.
pub fn compose_input(
    ids: &[usize],
    distances: &[usize],
    embeddings: &Matrix,
    positions: &Matrix,
) -> Matrix {
    assert_eq!(ids.len(), distances.len(), "ids/distances length mismatch");
    let emb_dim = embeddings.cols();
    let pos_dim = positions.cols();
    let mut x = Matrix::zeros(ids.len(), emb_dim + pos_dim);
    for (i, (&id, &d)) in ids.iter().zip(distances).enumerate() {
        let row = x.row_mut(i);
        row[..emb_dim].copy_from_slice(embeddings.row(id));
        row[emb_dim..].copy_from_slice(positions.row(d));
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn example(tokens: &[&str], s: usize, e: usize) -> Example {
        Example::new(
            tokens.iter().map(|t| t.to_string()).collect(),
            s,
            e,
            Polarity::Neutral,
        )
        .unwrap()
    }

    #[test]
    fn span_validation() {
        assert!(Example::new(vec!["a".into()], 0, 0, Polarity::Positive).is_err());
        assert!(Example::new(vec!["a".into()], 0, 2, Polarity::Positive).is_err());
        assert!(Example::new(vec!["a".into()], 0, 1, Polarity::Positive).is_ok());
    }

    #[test]
    fn vocab_first_occurrence_order() {
        let v = Vocab::build(&[example(&["a", "b", "a"], 0, 1)]).unwrap();
        assert_eq!(v.id("a"), 2);
        assert_eq!(v.id("b"), 3);
        assert_eq!(v.id("zzz"), UNK_ID);
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn vocab_rebuild_is_identical_and_counts_distinct() {
        let corpus = vec![
            example(&["x", "y", "z", "x"], 0, 1),
            example(&["p", "q"], 1, 2),
            example(&["y", "r", "s", "t", "u", "v", "w", "a", "b", "c", "d", "e", "f"], 0, 1),
        ];
        let v1 = Vocab::build(&corpus).unwrap();
        let v2 = Vocab::build(&corpus).unwrap();
        assert_eq!(v1, v2);
        // 17 distinct tokens + pad + unk
        assert_eq!(v1.len(), 19);
        assert_eq!(v1.hash(), v2.hash());
    }

    #[test]
    fn vocab_round_trips_through_text() {
        let v = Vocab::build(&[example(&["alpha", "beta", "gamma"], 1, 2)]).unwrap();
        let restored = Vocab::from_text(&v.to_text()).unwrap();
        assert_eq!(v, restored);
        assert_eq!(v.hash(), restored.hash());
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(Vocab::build(&[]).is_err());
    }

    #[test]
    fn distances_from_span() {
        let ex = example(&["great", "food", "but", "dreadful", "service"], 1, 2);
        assert_eq!(relative_distance(&ex, 99), vec![1, 0, 1, 2, 3]);
        let ex = example(&["great", "food", "but", "dreadful", "service"], 4, 5);
        assert_eq!(relative_distance(&ex, 99), vec![4, 3, 2, 1, 0]);
    }

    #[test]
    fn distances_clip_at_d_max() {
        let tokens: Vec<String> = (0..200).map(|i| format!("t{i}")).collect();
        let ex = Example::new(tokens, 0, 1, Polarity::Positive).unwrap();
        let d = relative_distance(&ex, 99);
        assert_eq!(d[150], 99);
        assert_eq!(d[0], 0);
        assert!(d.iter().all(|&x| x <= 99));
        assert!(d[1..].iter().all(|&x| x > 0));
    }

    #[test]
    fn composed_rows_concatenate_word_and_position() {
        let rng = Rng::new(2);
        let v = Vocab::build(&[example(&["a", "b", "a"], 1, 2)]).unwrap();
        let emb = random_embeddings(&v, 5, &rng);
        let mut pos = Matrix::zeros(4, 3);
        for d in 0..4 {
            for k in 0..3 {
                pos[(d, k)] = (d * 10 + k) as f64;
            }
        }
        let ex = example(&["a", "b", "a"], 1, 2);
        let ids = v.ids(&ex);
        let dists = relative_distance(&ex, 3);
        let x = compose_input(&ids, &dists, &emb, &pos);
        assert_eq!(x.shape(), (3, 8));
        assert!(x.all_finite());
        // Word part then position part.
        assert_eq!(&x.row(0)[..5], emb.row(v.id("a")));
        assert_eq!(&x.row(0)[5..], pos.row(1));
        // Equal id + equal distance => identical rows.
        assert_eq!(x.row(0), x.row(2));

        // Zeroed position table leaves rows equal to padded word vectors.
        let zero_pos = Matrix::zeros(4, 3);
        let x0 = compose_input(&ids, &dists, &emb, &zero_pos);
        for i in 0..3 {
            assert_eq!(&x0.row(i)[..5], emb.row(ids[i]));
            assert_eq!(&x0.row(i)[5..], &[0.0, 0.0, 0.0]);
        }
    }
}
