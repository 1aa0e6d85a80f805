//! Corpus loaders and dataset assembly.
//!
//! Two input formats produce the same [`Example`] stream:
//!
//! * SemEval-2014 task-4 markup: `sentence` elements holding a `text`
//!   node and `aspectTerm` entries with `term`, `polarity`, `from`,
//!   `to` character offsets. One example per (sentence, aspect term);
//!   `conflict` polarities are dropped and counted.
//! * Twitter 3-line records: sentence with a literal `$T$` placeholder,
//!   the aspect string, then a label in {−1, 0, 1}.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::features::{align_span, tokenize, tokenize_words, Example, Polarity};
use crate::graph::ParseTree;
use crate::numerics::Rng;
use crate::{Error, Result};

/// Which loader to apply to a corpus file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    Twitter,
    Semeval,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<CorpusFormat> {
        match s {
            "twitter" => Ok(CorpusFormat::Twitter),
            "semeval" => Ok(CorpusFormat::Semeval),
            other => Err(Error::Config(format!(
                "data.format must be twitter or semeval, got {other:?}"
            ))),
        }
    }
}

/// Loader output: the examples plus bookkeeping counters.
#[derive(Clone, Debug, Default)]
pub struct LoadedCorpus {
    pub examples: Vec<Example>,
    /// Aspect terms excluded for carrying the conflict polarity.
    pub dropped_conflicts: usize,
    /// Aspect terms skipped because their character span missed every
    /// token (only under `skip_misaligned`).
    pub skipped_misaligned: usize,
}

pub fn load_corpus(path: &Path, format: CorpusFormat, skip_misaligned: bool) -> Result<LoadedCorpus> {
    let text = fs::read_to_string(path)?;
    match format {
        CorpusFormat::Twitter => load_twitter_str(&text),
        CorpusFormat::Semeval => load_semeval_str(&text, skip_misaligned),
    }
}

pub fn load_semeval(path: &Path, skip_misaligned: bool) -> Result<LoadedCorpus> {
    load_semeval_str(&fs::read_to_string(path)?, skip_misaligned)
}

pub fn load_twitter(path: &Path) -> Result<LoadedCorpus> {
    load_twitter_str(&fs::read_to_string(path)?)
}

#[derive(Debug, Default)]
struct RawAspect {
    term: String,
    polarity: String,
    from: usize,
    to: usize,
}

/// Parses SemEval markup from text. Each aspect's character offsets
/// snap to the smallest covering token range; an offset overlapping no
/// token is an alignment error naming the sentence id unless
/// `skip_misaligned` is set.
pub fn load_semeval_str(xml: &str, skip_misaligned: bool) -> Result<LoadedCorpus> {
    let mut reader = Reader::from_str(xml);
    let line_of = |pos: u64| xml[..(pos as usize).min(xml.len())].matches('\n').count() + 1;
    let xml_err = |pos: u64, e: quick_xml::Error| Error::Format {
        line: line_of(pos),
        msg: format!("markup error: {e}"),
    };

    let mut out = LoadedCorpus::default();
    let mut sentence_id = String::new();
    let mut in_sentence = false;
    let mut in_text = false;
    let mut text = String::new();
    let mut aspects: Vec<RawAspect> = Vec::new();

    loop {
        let pos = reader.buffer_position();
        match reader.read_event() {
            Err(e) => return Err(xml_err(reader.buffer_position(), e)),
            Ok(Event::Eof) => break,
            Ok(Event::Start(e)) | Ok(Event::Empty(e)) => {
                let is_empty_tag = matches!(
                    xml.as_bytes().get(reader.buffer_position() as usize - 2),
                    Some(b'/')
                );
                let _ = is_empty_tag;
                match e.name().as_ref() {
                    b"sentence" => {
                        in_sentence = true;
                        text.clear();
                        aspects.clear();
                        sentence_id = attr_string(&e, b"id", &reader).unwrap_or_default();
                    }
                    b"text" => {
                        in_text = in_sentence;
                    }
                    b"aspectTerm" if in_sentence => {
                        let get = |name: &[u8]| -> Result<String> {
                            attr_string(&e, name, &reader).ok_or_else(|| Error::Format {
                                line: line_of(pos),
                                msg: format!(
                                    "aspectTerm missing {} attribute",
                                    String::from_utf8_lossy(name)
                                ),
                            })
                        };
                        let number = |name: &[u8]| -> Result<usize> {
                            let raw = get(name)?;
                            raw.parse().map_err(|_| Error::Format {
                                line: line_of(pos),
                                msg: format!(
                                    "bad {} offset {raw:?}",
                                    String::from_utf8_lossy(name)
                                ),
                            })
                        };
                        aspects.push(RawAspect {
                            term: get(b"term")?,
                            polarity: get(b"polarity")?,
                            from: number(b"from")?,
                            to: number(b"to")?,
                        });
                    }
                    _ => {}
                }
            }
            Ok(Event::Text(t)) => {
                if in_text {
                    let decoded = t.xml_content().map_err(|e| Error::Format {
                        line: line_of(pos),
                        msg: format!("bad text content: {e}"),
                    })?;
                    text.push_str(&decoded);
                }
            }
            Ok(Event::End(e)) => match e.name().as_ref() {
                b"text" => in_text = false,
                b"sentence" => {
                    in_sentence = false;
                    finish_sentence(
                        &sentence_id,
                        &text,
                        &aspects,
                        skip_misaligned,
                        &mut out,
                        line_of(pos),
                    )?;
                }
                _ => {}
            },
            Ok(_) => {}
        }
    }
    Ok(out)
}

fn attr_string(
    e: &quick_xml::events::BytesStart<'_>,
    name: &[u8],
    reader: &Reader<&[u8]>,
) -> Option<String> {
    let attr = e.try_get_attribute(name).ok().flatten()?;
    attr.decode_and_unescape_value(reader.decoder())
        .ok()
        .map(|v| v.into_owned())
}

fn finish_sentence(
    sentence_id: &str,
    text: &str,
    aspects: &[RawAspect],
    skip_misaligned: bool,
    out: &mut LoadedCorpus,
    lineno: usize,
) -> Result<()> {
    if aspects.is_empty() {
        return Ok(());
    }
    let tokens = tokenize(text);
    let words: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
    for aspect in aspects {
        let label = match aspect.polarity.as_str() {
            "positive" => Polarity::Positive,
            "negative" => Polarity::Negative,
            "neutral" => Polarity::Neutral,
            "conflict" => {
                out.dropped_conflicts += 1;
                continue;
            }
            other => {
                return Err(Error::Format {
                    line: lineno,
                    msg: format!("unknown polarity {other:?} in sentence {sentence_id}"),
                })
            }
        };
        match align_span(&tokens, aspect.from, aspect.to) {
            Some((s, e)) => {
                out.examples
                    .push(Example::new(words.clone(), s, e, label)?);
            }
            None if skip_misaligned => out.skipped_misaligned += 1,
            None => {
                return Err(Error::Alignment(format!(
                    "aspect {:?} at [{}, {}) aligns to no token in sentence {sentence_id}",
                    aspect.term, aspect.from, aspect.to
                )))
            }
        }
    }
    Ok(())
}

/// Parses Twitter 3-line records from text. Blank trailing lines are
/// tolerated; anything else must come in complete records.
pub fn load_twitter_str(text: &str) -> Result<LoadedCorpus> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().collect();
    // Trailing blank lines are not part of any record.
    let mut end = lines.len();
    while end > 0 && lines[end - 1].1.trim().is_empty() {
        end -= 1;
    }
    let lines = &lines[..end];
    if lines.len() % 3 != 0 {
        return Err(Error::format(
            lines.last().map_or(0, |(i, _)| i + 1),
            format!("{} lines do not form 3-line records", lines.len()),
        ));
    }
    let mut out = LoadedCorpus::default();
    for chunk in lines.chunks(3) {
        let (sent_no, sentence) = chunk[0];
        let (aspect_no, aspect) = chunk[1];
        let (label_no, label_raw) = chunk[2];

        let aspect = aspect.trim();
        if aspect.is_empty() {
            return Err(Error::format(aspect_no + 1, "empty aspect line"));
        }
        let label = match label_raw.trim() {
            "-1" => Polarity::Negative,
            "0" => Polarity::Neutral,
            "1" => Polarity::Positive,
            other => {
                return Err(Error::format(
                    label_no + 1,
                    format!("label must be -1, 0 or 1, got {other:?}"),
                ))
            }
        };
        let placeholder = sentence.find("$T$").ok_or_else(|| {
            Error::format(sent_no + 1, "sentence is missing the $T$ placeholder")
        })?;
        let prefix = tokenize_words(&sentence[..placeholder]);
        let aspect_tokens = tokenize_words(aspect);
        let suffix = tokenize_words(&sentence[placeholder + 3..]);
        if aspect_tokens.is_empty() {
            return Err(Error::format(aspect_no + 1, "aspect has no tokens"));
        }
        let start = prefix.len();
        let span_end = start + aspect_tokens.len();
        let mut tokens = prefix;
        tokens.extend(aspect_tokens);
        tokens.extend(suffix);
        out.examples
            .push(Example::new(tokens, start, span_end, label)?);
    }
    Ok(out)
}

/// An example paired with its optional dependency parse. Parses are
/// keyed by example order, so the pair travels through shuffles and
/// splits as a unit.
#[derive(Clone, Debug)]
pub struct Paired {
    pub example: Example,
    pub tree: Option<ParseTree>,
}

/// Zips examples with sidecar parses. `None` leaves every example on
/// the linear-chain fallback; a provided list must match in length and
/// per-example token count.
pub fn attach_parses(examples: Vec<Example>, trees: Option<Vec<ParseTree>>) -> Result<Vec<Paired>> {
    match trees {
        None => Ok(examples
            .into_iter()
            .map(|example| Paired {
                example,
                tree: None,
            })
            .collect()),
        Some(trees) => {
            if trees.len() != examples.len() {
                return Err(Error::Domain(format!(
                    "{} parses for {} examples",
                    trees.len(),
                    examples.len()
                )));
            }
            examples
                .into_iter()
                .zip(trees)
                .enumerate()
                .map(|(i, (example, tree))| {
                    if tree.len() != example.len() {
                        return Err(Error::Domain(format!(
                            "example {i}: parse has {} tokens, sentence has {}",
                            tree.len(),
                            example.len()
                        )));
                    }
                    Ok(Paired {
                        example,
                        tree: Some(tree),
                    })
                })
                .collect()
        }
    }
}

/// Seeded split: about `fraction` of the pairs (rounded down) become
/// the validation set. Order within each part follows the shuffle.
pub fn split_validation(
    pairs: Vec<Paired>,
    fraction: f64,
    rng: &Rng,
) -> Result<(Vec<Paired>, Vec<Paired>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "data.val_fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let n_val = (pairs.len() as f64 * fraction).floor() as usize;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    rng.stream("valsplit").shuffle(&mut order);
    let mut train = Vec::with_capacity(pairs.len() - n_val);
    let mut val = Vec::with_capacity(n_val);
    let mut slots: Vec<Option<Paired>> = pairs.into_iter().map(Some).collect();
    for (k, &idx) in order.iter().enumerate() {
        let item = slots[idx].take().expect("each index visited once");
        if k < n_val {
            val.push(item);
        } else {
            train.push(item);
        }
    }
    Ok((train, val))
}

/// A named corpus with its splits.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<Paired>,
    pub val: Vec<Paired>,
    pub test: Vec<Paired>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEMEVAL_SAMPLE: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<sentences>
    <sentence id="11">
        <text>The battery life is great but the screen is dim.</text>
        <aspectTerms>
            <aspectTerm term="battery life" polarity="positive" from="4" to="16"/>
            <aspectTerm term="screen" polarity="negative" from="34" to="40"/>
        </aspectTerms>
    </sentence>
    <sentence id="12">
        <text>Coffee is fine.</text>
        <aspectTerms>
            <aspectTerm term="Coffee" polarity="conflict" from="0" to="6"/>
        </aspectTerms>
        <aspectCategories>
            <aspectCategory category="food" polarity="neutral"/>
        </aspectCategories>
    </sentence>
    <sentence id="13">
        <text>No aspects here.</text>
    </sentence>
</sentences>
"#;

    #[test]
    fn semeval_yields_one_example_per_aspect() {
        let out = load_semeval_str(SEMEVAL_SAMPLE, false).unwrap();
        assert_eq!(out.examples.len(), 2);
        assert_eq!(out.dropped_conflicts, 1);
        assert_eq!(out.skipped_misaligned, 0);

        let first = &out.examples[0];
        let second = &out.examples[1];
        // Two aspects share one token sequence but differ in span.
        assert_eq!(first.tokens(), second.tokens());
        assert_eq!(first.aspect_span(), (1, 3));
        assert_eq!(
            &first.tokens()[1..3],
            &["battery".to_string(), "life".to_string()]
        );
        assert_eq!(first.label, Polarity::Positive);
        assert_eq!(second.label, Polarity::Negative);
        let (s2, e2) = second.aspect_span();
        assert_eq!(&second.tokens()[s2..e2], &["screen".to_string()]);
    }

    #[test]
    fn semeval_alignment_error_names_sentence() {
        let xml = r#"<sentences><sentence id="99"><text>Short text.</text>
<aspectTerms><aspectTerm term="x" polarity="neutral" from="200" to="204"/></aspectTerms>
</sentence></sentences>"#;
        match load_semeval_str(xml, false) {
            Err(Error::Alignment(msg)) => assert!(msg.contains("99"), "{msg}"),
            other => panic!("expected alignment error, got {other:?}"),
        }
        let out = load_semeval_str(xml, true).unwrap();
        assert_eq!(out.examples.len(), 0);
        assert_eq!(out.skipped_misaligned, 1);
    }

    #[test]
    fn semeval_rejects_bad_markup_and_polarity() {
        assert!(load_semeval_str("<sentences><sentence>", false).is_err());
        let xml = r#"<sentences><sentence id="1"><text>Nice cake.</text>
<aspectTerms><aspectTerm term="cake" polarity="meh" from="5" to="9"/></aspectTerms>
</sentence></sentences>"#;
        assert!(matches!(
            load_semeval_str(xml, false),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn semeval_unescapes_entities() {
        let xml = r#"<sentences><sentence id="7">
<text>Food &amp; wine were great.</text>
<aspectTerms><aspectTerm term="wine" polarity="positive" from="7" to="11"/></aspectTerms>
</sentence></sentences>"#;
        let out = load_semeval_str(xml, false).unwrap();
        let ex = &out.examples[0];
        let (s, e) = ex.aspect_span();
        assert_eq!(&ex.tokens()[s..e], &["wine".to_string()]);
        assert!(ex.tokens().contains(&"&".to_string()));
    }

    #[test]
    fn twitter_example_from_placeholder() {
        let text = "i love $T$ so much\nthis phone\n1\n";
        let out = load_twitter_str(text).unwrap();
        assert_eq!(out.examples.len(), 1);
        let ex = &out.examples[0];
        assert_eq!(ex.len(), 6);
        assert_eq!(ex.aspect_span(), (2, 4));
        assert_eq!(ex.label, Polarity::Positive);
        assert_eq!(
            ex.tokens(),
            &["i", "love", "this", "phone", "so", "much"]
        );
    }

    #[test]
    fn twitter_label_mapping_and_errors() {
        let ok = "x $T$ y\na\n0\n";
        assert_eq!(
            load_twitter_str(ok).unwrap().examples[0].label,
            Polarity::Neutral
        );

        // Record length not divisible by 3.
        assert!(matches!(
            load_twitter_str("one $T$\naspect\n"),
            Err(Error::Format { .. })
        ));
        // Label outside {-1, 0, 1}.
        assert!(load_twitter_str("a $T$\nb\n2\n").is_err());
        // Empty aspect line.
        match load_twitter_str("a $T$ b\n\n1\n") {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
        // Missing placeholder.
        assert!(load_twitter_str("no placeholder\nb\n1\n").is_err());
    }

    #[test]
    fn loaders_are_deterministic() {
        let a = load_semeval_str(SEMEVAL_SAMPLE, false).unwrap();
        let b = load_semeval_str(SEMEVAL_SAMPLE, false).unwrap();
        assert_eq!(a.examples, b.examples);
    }

    #[test]
    fn conflict_accounting_is_complete() {
        let out = load_semeval_str(SEMEVAL_SAMPLE, false).unwrap();
        // 3 aspect terms in the file: 2 loaded + 1 dropped.
        assert_eq!(out.examples.len() + out.dropped_conflicts, 3);
    }

    #[test]
    fn attach_parses_validates_counts() {
        let ex = Example::new(
            vec!["a".into(), "b".into()],
            0,
            1,
            Polarity::Neutral,
        )
        .unwrap();
        let tree2 = ParseTree::from_heads(&[-1, 0]).unwrap();
        let tree3 = ParseTree::from_heads(&[-1, 0, 0]).unwrap();
        let paired = attach_parses(vec![ex.clone()], Some(vec![tree2])).unwrap();
        assert!(paired[0].tree.is_some());
        assert!(attach_parses(vec![ex.clone()], Some(vec![tree3])).is_err());
        assert!(attach_parses(vec![ex.clone()], Some(vec![])).is_err());
        let bare = attach_parses(vec![ex], None).unwrap();
        assert!(bare[0].tree.is_none());
    }

    #[test]
    fn validation_split_is_seeded_and_exhaustive() {
        let pairs: Vec<Paired> = (0..20)
            .map(|i| Paired {
                example: Example::new(
                    vec![format!("w{i}"), "x".into()],
                    0,
                    1,
                    Polarity::Neutral,
                )
                .unwrap(),
                tree: None,
            })
            .collect();
        let rng = Rng::new(5);
        let (train, val) = split_validation(pairs.clone(), 0.1, &rng).unwrap();
        assert_eq!(val.len(), 2);
        assert_eq!(train.len(), 18);
        let (train2, val2) = split_validation(pairs, 0.1, &rng).unwrap();
        let words = |ps: &[Paired]| -> Vec<String> {
            ps.iter().map(|p| p.example.tokens()[0].clone()).collect()
        };
        assert_eq!(words(&train), words(&train2));
        assert_eq!(words(&val), words(&val2));
    }
}
