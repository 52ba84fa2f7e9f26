use std::path::Path;

use pathx_core::dataset::FoldSplit;
use pathx_core::explain::Explanation;
use pathx_core::recommenders::RankedList;

use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new().from_path(path).map_err(|e| Error::Other(format!("{}: {e}", path.display())))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn row<I, T>(w: &mut csv::Writer<std::fs::File>, path: &Path, fields: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(fields).map_err(|e| Error::Other(format!("{}: {e}", path.display())))
}

/// `user,item,fold,split` for every interaction of every fold.
pub fn write_fold_manifest(folds: &[FoldSplit], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    row(&mut w, path, ["user", "item", "fold", "split"])?;
    for f in folds {
        let fold = f.fold_index.to_string();
        for (split, d) in [("train", &f.train), ("test", &f.test)] {
            for it in d.interactions() {
                row(&mut w, path, [it.user.as_str(), it.item.as_str(), &fold, split])?;
            }
        }
    }
    finish(w, path)
}

/// `fold,user,rank,item,score,fallback`; ranks start at 1.
pub fn write_recommendations(fold: usize, lists: &[RankedList], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    row(&mut w, path, ["fold", "user", "rank", "item", "score", "fallback"])?;
    let fold = fold.to_string();
    for l in lists {
        for (rank, (item, score)) in l.items.iter().enumerate() {
            row(
                &mut w,
                path,
                [
                    fold.as_str(),
                    l.user.as_str(),
                    &(rank + 1).to_string(),
                    item,
                    &score.to_string(),
                    if l.fallback { "1" } else { "0" },
                ],
            )?;
        }
    }
    finish(w, path)
}

/// One explained recommendation of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationRecord {
    pub user: String,
    pub explanation: Explanation,
}

/// `fold,user,recommended,attributes,edge_types,linked_items,score,sentence`.
/// Lists are `|`-separated.
pub fn write_explanations(fold: usize, rows: &[ExplanationRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    row(
        &mut w,
        path,
        ["fold", "user", "recommended", "attributes", "edge_types", "linked_items", "score", "sentence"],
    )?;
    let fold = fold.to_string();
    for r in rows {
        let e = &r.explanation;
        let attrs: Vec<&str> = e.attributes.iter().map(|a| a.id.as_str()).collect();
        let edges: Vec<&str> = e.attributes.iter().map(|a| a.edge.as_str()).collect();
        let score = e.attributes.first().map_or(String::new(), |a| a.score.to_string());
        row(
            &mut w,
            path,
            [
                fold.as_str(),
                r.user.as_str(),
                e.recommended.as_str(),
                &attrs.join("|"),
                &edges.join("|"),
                &e.linked_items.join("|"),
                &score,
                e.sentence.as_str(),
            ],
        )?;
    }
    finish(w, path)
}
