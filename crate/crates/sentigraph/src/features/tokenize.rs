//! Lowercasing tokenizer splitting on whitespace and punctuation
//! boundaries, with character offsets kept for span alignment.

/// A token with its half-open character-offset range in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Splits `text` into lowercased tokens: alphanumeric runs stay
/// together, every other non-whitespace character becomes a single-char
/// token. Offsets are character (not byte) positions in the input.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let mut word_start = 0usize;

    let flush = |word: &mut String, start: usize, end: usize, tokens: &mut Vec<Token>| {
        if !word.is_empty() {
            tokens.push(Token {
                text: std::mem::take(word),
                start,
                end,
            });
        }
    };

    for (pos, ch) in text.chars().enumerate() {
        if ch.is_alphanumeric() {
            if word.is_empty() {
                word_start = pos;
            }
            word.extend(ch.to_lowercase());
        } else {
            flush(&mut word, word_start, pos, &mut tokens);
            if !ch.is_whitespace() {
                tokens.push(Token {
                    text: ch.to_lowercase().collect(),
                    start: pos,
                    end: pos + 1,
                });
            }
        }
    }
    let total = text.chars().count();
    flush(&mut word, word_start, total, &mut tokens);
    tokens
}

/// Token texts only.
pub fn tokenize_words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

/// Smallest token range covering the character span `[from, to)`:
/// every token overlapping the span is included. `None` when no token
/// overlaps.
pub fn align_span(tokens: &[Token], from: usize, to: usize) -> Option<(usize, usize)> {
    if from >= to {
        return None;
    }
    let mut first = None;
    let mut last = None;
    for (i, t) in tokens.iter().enumerate() {
        if t.start < to && t.end > from {
            if first.is_none() {
                first = Some(i);
            }
            last = Some(i);
        }
    }
    match (first, last) {
        (Some(a), Some(b)) => Some((a, b + 1)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_words_and_punctuation() {
        let words = tokenize_words("The battery-life, it's great!");
        assert_eq!(
            words,
            vec!["the", "battery", "-", "life", ",", "it", "'", "s", "great", "!"]
        );
    }

    #[test]
    fn offsets_cover_source_chars() {
        let toks = tokenize("Ab, cd");
        assert_eq!(toks[0].text, "ab");
        assert_eq!((toks[0].start, toks[0].end), (0, 2));
        assert_eq!((toks[1].start, toks[1].end), (2, 3));
        assert_eq!((toks[2].start, toks[2].end), (4, 6));
    }

    #[test]
    fn aligns_char_span_to_covering_tokens() {
        let toks = tokenize("The battery life is great");
        // "battery life" = chars [4, 16)
        assert_eq!(align_span(&toks, 4, 16), Some((1, 3)));
        assert_eq!(toks[1].text, "battery");
        assert_eq!(toks[2].text, "life");
        // Partial overlap still snaps to the covering token.
        assert_eq!(align_span(&toks, 6, 9), Some((1, 2)));
        // Whitespace-only span overlaps nothing.
        assert_eq!(align_span(&toks, 3, 4), None);
        assert_eq!(align_span(&toks, 9, 9), None);
    }

    #[test]
    fn empty_text_yields_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   ").is_empty());
    }
}
