use std::path::Path;

use pathx_core::dataset::{Dataset, Interaction, RecencyMode};

use super::{csv_err, field, parse_err, reader, Column};
use crate::error::{Error, Result};

/// Column mapping of an interaction file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionSchema {
    pub delimiter: u8,
    pub header: bool,
    pub user: Column,
    pub item: Column,
    pub rating: Option<Column>,
    pub timestamp: Option<Column>,
    pub weight: Option<Column>,
    pub recency: RecencyMode,
}

impl InteractionSchema {
    /// `ratings.csv` of the MovieLens small release.
    pub fn movielens() -> Self {
        InteractionSchema {
            delimiter: b',',
            header: true,
            user: Column::name("userId"),
            item: Column::name("movieId"),
            rating: Some(Column::name("rating")),
            timestamp: Some(Column::name("timestamp")),
            weight: None,
            recency: RecencyMode::Timestamp,
        }
    }

    /// `user_artists.dat` of the HetRec LastFM release.
    pub fn lastfm() -> Self {
        InteractionSchema {
            delimiter: b'\t',
            header: true,
            user: Column::name("userID"),
            item: Column::name("artistID"),
            rating: None,
            timestamp: None,
            weight: Some(Column::name("weight")),
            recency: RecencyMode::Weight,
        }
    }
}

fn parse_num<T: std::str::FromStr>(v: &str, path: &Path, line: u64, what: &str) -> Result<Option<T>> {
    if v.is_empty() {
        return Ok(None);
    }
    v.parse().map(Some).map_err(|_| parse_err(path, line, format!("cannot parse {what} `{v}`")))
}

/// Loads interactions. An empty file yields an empty dataset.
pub fn load_interactions(path: &Path, schema: &InteractionSchema) -> Result<Dataset> {
    if std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len() == 0 {
        return Ok(Dataset::new(Vec::new(), schema.recency)?);
    }
    let mut rdr = reader(path, schema.delimiter, schema.header)?;
    let headers = if schema.header { Some(rdr.headers().map_err(|e| csv_err(path, e))?.clone()) } else { None };
    let h = headers.as_ref();
    let user = schema.user.resolve(h, path)?;
    let item = schema.item.resolve(h, path)?;
    let rating = schema.rating.as_ref().map(|c| c.resolve(h, path)).transpose()?;
    let timestamp = schema.timestamp.as_ref().map(|c| c.resolve(h, path)).transpose()?;
    let weight = schema.weight.as_ref().map(|c| c.resolve(h, path)).transpose()?;
    match schema.recency {
        RecencyMode::Timestamp if timestamp.is_none() => {
            return Err(Error::Config("timestamp recency needs a timestamp column".into()))
        }
        RecencyMode::Weight if weight.is_none() => {
            return Err(Error::Config("weight recency needs a weight column".into()))
        }
        _ => {}
    }

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        let u = field(&rec, user, path, "user")?;
        let i = field(&rec, item, path, "item")?;
        if u.is_empty() || i.is_empty() {
            return Err(parse_err(path, line, "empty user or item"));
        }
        let mut it = Interaction::new(u, i);
        if let Some(c) = rating {
            it.rating = parse_num(field(&rec, c, path, "rating")?, path, line, "rating")?;
        }
        if let Some(c) = timestamp {
            it.timestamp = parse_num(field(&rec, c, path, "timestamp")?, path, line, "timestamp")?;
        }
        if let Some(c) = weight {
            it.weight = parse_num(field(&rec, c, path, "weight")?, path, line, "weight")?;
        }
        out.push(it);
    }
    Dataset::new(out, schema.recency).map_err(Error::from)
}
