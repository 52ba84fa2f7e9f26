use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use pathx_core::kg::{GraphBuilder, KgConfig, KnowledgeGraph};
use serde::{Deserialize, Serialize};

use super::{csv_err, field, parse_err, reader, Column};
use crate::error::{Error, Result};

/// How catalog items are recognised in a triple file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemMarker {
    /// A column flags item nodes: `h` (head), `t` (tail), `ht` (both);
    /// `1`, `true`, `yes` and `item` flag the head.
    Column(Column),
    /// Every head of a non-hierarchy triple is an item.
    Heads,
    /// Items are listed explicitly, e.g. taken from the interaction file.
    /// Listed ids without any triple are ignored.
    List(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleFormat {
    pub delimiter: u8,
    pub header: bool,
    pub head: Column,
    pub relation: Column,
    pub tail: Column,
    pub items: ItemMarker,
}

impl TripleFormat {
    /// The format written by [`write_triples`]: tab-separated, no header,
    /// item flags in the fourth column.
    pub fn canonical() -> Self {
        TripleFormat {
            delimiter: b'\t',
            header: false,
            head: Column::Index(0),
            relation: Column::Index(1),
            tail: Column::Index(2),
            items: ItemMarker::Column(Column::Index(3)),
        }
    }

    fn header_needed(&self) -> bool {
        self.header
            || self.head.needs_header()
            || self.relation.needs_header()
            || self.tail.needs_header()
            || matches!(&self.items, ItemMarker::Column(c) if c.needs_header())
    }
}

fn flags(v: &str) -> (bool, bool) {
    match v.to_ascii_lowercase().as_str() {
        "h" | "1" | "true" | "yes" | "item" => (true, false),
        "t" => (false, true),
        "ht" | "th" => (true, true),
        _ => (false, false),
    }
}

/// Reads triples into `b`, returning the number of rows read. A row with a
/// missing or empty field, or a self loop, is an error carrying its line.
pub fn read_triples(b: &mut GraphBuilder, path: &Path, fmt: &TripleFormat, hierarchy: &[String]) -> Result<usize> {
    let header = fmt.header_needed();
    let mut rdr = reader(path, fmt.delimiter, header)?;
    let headers = if header { Some(rdr.headers().map_err(|e| csv_err(path, e))?.clone()) } else { None };
    let h = fmt.head.resolve(headers.as_ref(), path)?;
    let r = fmt.relation.resolve(headers.as_ref(), path)?;
    let t = fmt.tail.resolve(headers.as_ref(), path)?;
    let marker = match &fmt.items {
        ItemMarker::Column(c) => Some(c.resolve(headers.as_ref(), path)?),
        _ => None,
    };
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        let (hv, rv, tv) = (field(&rec, h, path, "head")?, field(&rec, r, path, "relation")?, field(&rec, t, path, "tail")?);
        b.add_triple(hv, rv, tv).map_err(|e| parse_err(path, line, e.to_string()))?;
        if let Some(m) = marker {
            let (fh, ft) = flags(rec.get(m).unwrap_or(""));
            if fh {
                b.mark_item(hv);
            }
            if ft {
                b.mark_item(tv);
            }
        }
        rows += 1;
    }
    match &fmt.items {
        ItemMarker::Heads => b.mark_heads_as_items(hierarchy),
        ItemMarker::List(items) => {
            for i in items {
                if b.contains(i) {
                    b.mark_item(i);
                }
            }
        }
        ItemMarker::Column(_) => {}
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelFormat {
    pub delimiter: u8,
    pub header: bool,
    pub id: Column,
    pub label: Column,
}

impl LabelFormat {
    pub fn canonical() -> Self {
        LabelFormat { delimiter: b'\t', header: false, id: Column::Index(0), label: Column::Index(1) }
    }
}

/// Reads `id, label` rows into `b`. Ids absent from the graph are skipped.
pub fn read_labels(b: &mut GraphBuilder, path: &Path, fmt: &LabelFormat) -> Result<usize> {
    let header = fmt.header || fmt.id.needs_header() || fmt.label.needs_header();
    let mut rdr = reader(path, fmt.delimiter, header)?;
    let headers = if header { Some(rdr.headers().map_err(|e| csv_err(path, e))?.clone()) } else { None };
    let id = fmt.id.resolve(headers.as_ref(), path)?;
    let label = fmt.label.resolve(headers.as_ref(), path)?;
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let (i, l) = (field(&rec, id, path, "id")?, field(&rec, label, path, "label")?);
        if !l.is_empty() && b.contains(i) {
            b.set_label(i, l);
            n += 1;
        }
    }
    Ok(n)
}

/// Loads a graph from a triple file and optional label file.
pub fn load_graph(
    triples: &Path,
    fmt: &TripleFormat,
    labels: Option<(&Path, &LabelFormat)>,
    config: KgConfig,
) -> Result<KnowledgeGraph> {
    let mut b = GraphBuilder::new();
    read_triples(&mut b, triples, fmt, &config.hierarchy_edges)?;
    if let Some((p, lf)) = labels {
        read_labels(&mut b, p, lf)?;
    }
    Ok(b.build(config))
}

/// Writes every triple in canonical form, sorted, with item flags.
pub fn write_triples(g: &KnowledgeGraph, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let is_item = |e: &str| g.node(e).is_some_and(|n| g.is_item(n));
    let mut rows: Vec<(&str, &str, &str)> = g.triples().collect();
    rows.sort_unstable();
    for (h, r, t) in rows {
        let flag = match (is_item(h), is_item(t)) {
            (true, true) => "ht",
            (true, false) => "h",
            (false, true) => "t",
            (false, false) => "-",
        };
        writeln!(out, "{h}\t{r}\t{t}\t{flag}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes `id<TAB>label` for every labelled entity, sorted by id.
pub fn write_labels(g: &KnowledgeGraph, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let mut rows: Vec<(&str, &str)> = g.labels().collect();
    rows.sort_unstable();
    for (id, l) in rows {
        writeln!(out, "{id}\t{l}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
