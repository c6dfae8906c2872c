//! Line-oriented helpers shared by the flat-file formats.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl fmt::Display) -> Self {
        ParseError { line, message: message.to_string() }
    }
}

/// Non-blank lines with `#` comments removed, paired with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Split `key = value`.
pub(crate) fn key_value(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

/// Parse `k1=v1 k2=v2` header attributes after the leading tag.
pub(crate) fn header_attrs<'a>(
    lineno: usize,
    line: &'a str,
    tag: &str,
) -> Result<Vec<(&'a str, &'a str)>, ParseError> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(ParseError::new(lineno, format!("expected header `{tag}`")));
    }
    parts
        .map(|p| key_value(p).ok_or_else(|| ParseError::new(lineno, format!("bad attribute {p:?}"))))
        .collect()
}

pub(crate) fn parse_num<T: std::str::FromStr>(lineno: usize, s: &str) -> Result<T, ParseError> {
    s.trim()
        .parse()
        .map_err(|_| ParseError::new(lineno, format!("bad number {:?}", s.trim())))
}

/// Comma separated list; an empty string gives an empty list.
pub(crate) fn parse_list<T: std::str::FromStr>(lineno: usize, s: &str) -> Result<Vec<T>, ParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| parse_num(lineno, p)).collect()
}

pub(crate) fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# head\n\nfoo = 1 # trailing\n  \nbar\n";
        let lines: Vec<_> = content_lines(text).collect();
        assert_eq!(lines, vec![(3, "foo = 1"), (5, "bar")]);
    }

    #[test]
    fn header_attributes() {
        let attrs = header_attrs(1, "cube-set d=2 dirs=1,2", "cube-set").unwrap();
        assert_eq!(attrs, vec![("d", "2"), ("dirs", "1,2")]);
        assert!(header_attrs(1, "cube d=2", "cube-set").is_err());
        assert!(header_attrs(1, "cube-set d2", "cube-set").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<u32>(1, "1, 2,3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_list::<u32>(1, "").unwrap(), Vec::<u32>::new());
        assert_eq!(parse_list::<u32>(4, "1,x").unwrap_err().line, 4);
    }
}
