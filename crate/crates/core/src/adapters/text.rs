//! Shared helpers for the line-oriented string grammars.

use super::ParseError;
use crate::route::MoleculeToken;

/// 1-based line and byte column of `offset`.
pub(crate) fn line_col(input: &[u8], offset: usize) -> (usize, usize) {
    let before = &input[..offset.min(input.len())];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    (line, offset - line_start + 1)
}

/// Byte offset of a 1-based line/column pair.
pub(crate) fn offset_of(text: &str, line: usize, column: usize) -> usize {
    let mut start = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (start + column.saturating_sub(1)).min(text.len());
        }
        start += l.len();
    }
    text.len()
}

/// A non-blank input line.
pub(crate) struct Line<'a> {
    pub number: usize,
    pub offset: usize,
    pub text: &'a str,
}

/// Non-blank lines with their positions; a trailing `\r` is dropped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    let mut offset = 0;
    text.split('\n').enumerate().filter_map(move |(i, raw)| {
        let start = offset;
        offset += raw.len() + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        (!line.trim().is_empty()).then_some(Line {
            number: i + 1,
            offset: start,
            text: line,
        })
    })
}

impl Line<'_> {
    pub fn error(&self, at: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.number,
            column: at + 1,
            offset: self.offset + at,
            message: message.into(),
        }
    }

    /// Token occupying `self.text[start..end]`.
    pub fn token(&self, start: usize, end: usize) -> Result<MoleculeToken, ParseError> {
        let raw = &self.text[start..end];
        MoleculeToken::new(raw).map_err(|e| {
            let lead = raw.len() - raw.trim_start().len();
            self.error(start + if raw.trim().is_empty() { 0 } else { lead }, e.to_string())
        })
    }
}

/// Pieces of `s` between `sep`, with their start offsets (relative to `base`).
pub(crate) fn split_with_offsets<'a>(s: &'a str, sep: &'a str, base: usize) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    let mut start = 0;
    s.split(sep).map(move |piece| {
        let at = base + start;
        start += piece.len() + sep.len();
        (at, piece)
    })
}
