//! Delimited file formats: triples, labels, interactions and run artifacts.

pub mod export;
pub mod interactions;
pub mod triples;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use std::path::Path;

/// A column addressed by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl Column {
    pub fn name(s: &str) -> Self {
        Column::Name(s.to_string())
    }

    pub(crate) fn resolve(&self, headers: Option<&csv::StringRecord>, path: &Path) -> Result<usize> {
        match self {
            Column::Index(i) => Ok(*i),
            Column::Name(n) => headers
                .and_then(|h| h.iter().position(|c| c.trim() == n))
                .ok_or_else(|| Error::MissingColumn { path: path.to_path_buf(), column: n.clone() }),
        }
    }

    fn needs_header(&self) -> bool {
        matches!(self, Column::Name(_))
    }
}

/// Delimiter given as a string in config files (`"\t"`, `","`, `"tab"`).
pub fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "\t" | "tab" | "\\t" => Ok(b'\t'),
        s if s.len() == 1 => Ok(s.as_bytes()[0]),
        _ => Err(Error::Config(format!("delimiter must be a single byte, got `{s}`"))),
    }
}

pub(crate) fn reader(path: &Path, delimiter: u8, header: bool) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .quoting(delimiter != b'\t')
        .from_reader(file))
}

pub(crate) fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(path, line, e.to_string())
}

pub(crate) fn field<'r>(rec: &'r csv::StringRecord, idx: usize, path: &Path, what: &str) -> Result<&'r str> {
    let line = rec.position().map_or(0, |p| p.line());
    match rec.get(idx) {
        Some(v) => Ok(v),
        None => Err(parse_err(path, line, format!("row has {} fields, `{what}` is column {idx}", rec.len()))),
    }
}
