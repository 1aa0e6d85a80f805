//! Readers for externally produced dependency parses.
//!
//! Two formats are accepted:
//!
//! * head-array sidecar: one line per example of space-separated head
//!   indices, −1 marking the root, `#` lines ignored;
//! * 10-column CoNLL-U: column 1 is the token index, column 7 the head
//!   (0 = root, converted to −1), sentences separated by blank lines.
//!   Multiword ranges (`1-2`) and empty nodes (`2.1`) are skipped.

use std::fs;
use std::path::Path;

use super::ParseTree;
use crate::{Error, Result};

/// Reads parses from `path`, detecting the format from the content.
pub fn read_parses(path: &Path) -> Result<Vec<ParseTree>> {
    read_parses_str(&fs::read_to_string(path)?)
}

/// Reads parses from text, detecting the format from the content.
pub fn read_parses_str(text: &str) -> Result<Vec<ParseTree>> {
    if looks_like_conllu(text) {
        read_conllu_str(text)
    } else {
        read_sidecar_str(text)
    }
}

fn looks_like_conllu(text: &str) -> bool {
    text.lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.split('\t').count() >= 8)
}

fn read_sidecar_str(text: &str) -> Result<Vec<ParseTree>> {
    let mut trees = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut heads = Vec::new();
        for field in trimmed.split_whitespace() {
            let h: i64 = field.parse().map_err(|_| {
                Error::format(lineno, format!("bad head index {field:?}"))
            })?;
            heads.push(h);
        }
        let tree = ParseTree::from_heads(&heads).map_err(|e| at_line(e, lineno))?;
        trees.push(tree);
    }
    Ok(trees)
}

fn read_conllu_str(text: &str) -> Result<Vec<ParseTree>> {
    let mut trees = Vec::new();
    // (1-based id, head) pairs of the sentence in progress, plus the line
    // it started on for error reporting.
    let mut pending: Vec<(u64, i64)> = Vec::new();
    let mut sentence_line = 0usize;

    let mut flush = |pending: &mut Vec<(u64, i64)>, start: usize| -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let mut heads = Vec::with_capacity(pending.len());
        for (pos, &(id, head)) in pending.iter().enumerate() {
            if id != pos as u64 + 1 {
                return Err(Error::format(
                    start,
                    format!("token ids must run 1..n, found {id} at position {}", pos + 1),
                ));
            }
            heads.push(if head == 0 { -1 } else { head - 1 });
        }
        pending.clear();
        trees.push(ParseTree::from_heads(&heads).map_err(|e| at_line(e, start))?);
        Ok(())
    };

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            flush(&mut pending, sentence_line)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(Error::format(
                lineno,
                format!("expected 10 tab-separated columns, found {}", fields.len()),
            ));
        }
        let id_field = fields[0];
        if id_field.contains('-') || id_field.contains('.') {
            continue; // multiword range or empty node
        }
        if pending.is_empty() {
            sentence_line = lineno;
        }
        let id: u64 = id_field
            .parse()
            .map_err(|_| Error::format(lineno, format!("bad token id {id_field:?}")))?;
        let head: i64 = fields[6]
            .parse()
            .map_err(|_| Error::format(lineno, format!("bad head field {:?}", fields[6])))?;
        if head < 0 {
            return Err(Error::format(lineno, format!("negative head {head}")));
        }
        pending.push((id, head));
    }
    flush(&mut pending, sentence_line)?;
    Ok(trees)
}

fn at_line(e: Error, lineno: usize) -> Error {
    match e {
        Error::Format { msg, .. } => Error::Format { line: lineno, msg },
        other => other,
    }
}
