//! Result files: `metrics.csv`, `ranking.csv`, `significance.csv`,
//! `filter.csv`, `errors.csv` and the markdown `report.md`.
//!
//! In the markdown tables the best value of each metric within a
//! recommender is bold (ties are all bold). A best value and any other
//! value whose paired Wilcoxon p-value against it exceeds 0.05 are both
//! underlined.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use pathx_core::explain::ScorerKind;
use pathx_core::metrics::{PathMetrics, RankingMetrics, WilcoxonResult};
use pathx_core::recommenders::ModelKind;

use crate::error::{Error, Result};
use crate::pipeline::{FilterStats, RankingRow, ResultRow, ResultsTable, SignificanceTest, StageError};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new().from_path(path).map_err(|e| Error::Other(format!("{}: {e}", path.display())))
}

fn put<I, T>(w: &mut csv::Writer<std::fs::File>, path: &Path, rec: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(rec).map_err(|e| Error::Other(format!("{}: {e}", path.display())))
}

fn done(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn num(v: f64) -> String {
    v.to_string()
}

pub fn write_metrics_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["model", "scorer", "k"];
    header.extend(PathMetrics::NAMES);
    header.extend(["users", "explained", "unexplained", "folds", "status"]);
    put(&mut w, path, header)?;
    for r in rows {
        let mut rec = vec![r.model.as_str().to_owned(), r.scorer.as_str().to_owned(), r.k.to_string()];
        match &r.metrics {
            Some(m) => {
                rec.extend(m.values().map(num));
                rec.extend([m.users, m.explained, m.unexplained, r.folds].map(|x| x.to_string()));
                rec.push("ok".into());
            }
            None => {
                rec.extend(std::iter::repeat_n(String::new(), 6 + 3));
                rec.push(r.folds.to_string());
                rec.push("error".into());
            }
        }
        put(&mut w, path, rec)?;
    }
    done(w, path)
}

pub fn write_ranking_csv(rows: &[RankingRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["model", "k"];
    header.extend(RankingMetrics::NAMES);
    header.extend(["folds", "status"]);
    put(&mut w, path, header)?;
    for r in rows {
        let mut rec = vec![r.model.as_str().to_owned(), r.k.to_string()];
        match &r.values {
            Some(v) => rec.extend(v.map(num)),
            None => rec.extend(std::iter::repeat_n(String::new(), 6)),
        }
        rec.push(r.folds.to_string());
        rec.push(if r.values.is_some() { "ok" } else { "error" }.into());
        put(&mut w, path, rec)?;
    }
    done(w, path)
}

pub fn write_significance_csv(tests: &[SignificanceTest], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    put(&mut w, path, ["model", "k", "metric", "a", "b", "pairs", "n", "statistic", "p_value", "exact", "degenerate"])?;
    for t in tests {
        let mut rec = vec![
            t.model.as_str().to_owned(),
            t.k.to_string(),
            t.metric.to_owned(),
            t.a.as_str().to_owned(),
            t.b.as_str().to_owned(),
            t.pairs.to_string(),
        ];
        match &t.result {
            Some(r) => rec.extend([
                r.n.to_string(),
                num(r.statistic),
                num(r.p_value),
                r.exact.to_string(),
                r.degenerate.to_string(),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), 5)),
        }
        put(&mut w, path, rec)?;
    }
    done(w, path)
}

pub fn write_filter_csv(s: &FilterStats, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    put(&mut w, path, ["stage", "users", "items", "ratings"])?;
    put(&mut w, path, ["raw".to_owned(), s.users_before.to_string(), s.items_before.to_string(), s.ratings_before.to_string()])?;
    put(&mut w, path, ["covered".to_owned(), s.users.to_string(), s.items.to_string(), s.ratings.to_string()])?;
    done(w, path)
}

pub fn write_errors_csv(errors: &[StageError], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    put(&mut w, path, ["fold", "model", "scorer", "stage", "message"])?;
    for e in errors {
        put(
            &mut w,
            path,
            [
                e.fold.map_or(String::new(), |f| f.to_string()),
                e.model.map_or(String::new(), |m| m.as_str().to_owned()),
                e.scorer.map_or(String::new(), |s| s.as_str().to_owned()),
                e.stage.clone(),
                e.message.clone(),
            ],
        )?;
    }
    done(w, path)
}

/// Writes every result file into `dir`. `errors.csv` is only written (and
/// a stale one removed) depending on whether any stage failed.
pub fn write_all(t: &ResultsTable, dir: &Path) -> Result<()> {
    write_metrics_csv(&t.rows, &dir.join("metrics.csv"))?;
    write_ranking_csv(&t.ranking, &dir.join("ranking.csv"))?;
    write_significance_csv(&t.tests, &dir.join("significance.csv"))?;
    write_filter_csv(&t.stats, &dir.join("filter.csv"))?;
    let errors = dir.join("errors.csv");
    if t.errors.is_empty() {
        if errors.exists() {
            std::fs::remove_file(&errors).map_err(|e| Error::io(&errors, e))?;
        }
    } else {
        write_errors_csv(&t.errors, &errors)?;
    }
    let md = dir.join("report.md");
    std::fs::write(&md, render_markdown(t)).map_err(|e| Error::io(&md, e))
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new().from_path(path).map_err(|e| Error::Other(format!("{}: {e}", path.display())))
}

fn records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    reader(path)?
        .records()
        .map(|r| r.map_err(|e| Error::Other(format!("{}: {e}", path.display()))))
        .collect()
}

fn parse<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let v = rec.get(i).unwrap_or("");
    v.parse().map_err(|_| Error::Parse { path: path.to_path_buf(), line, msg: format!("bad value `{v}` in column {i}") })
}

fn core<T>(path: &Path, rec: &csv::StringRecord, r: pathx_core::Result<T>) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    r.map_err(|e| Error::Parse { path: path.to_path_buf(), line, msg: e.to_string() })
}

const METRIC_NAMES: [&str; 6] = PathMetrics::NAMES;

/// Reads the files written by [`write_all`] back into a table.
pub fn read_all(dir: &Path) -> Result<ResultsTable> {
    let mut t = ResultsTable::default();
    let p = dir.join("metrics.csv");
    for rec in records(&p)? {
        let metrics = if rec.get(13) == Some("ok") {
            let v: Vec<f64> = (3..9).map(|i| parse(&p, &rec, i)).collect::<Result<_>>()?;
            Some(PathMetrics {
                mid: v[0],
                tid: v[1],
                lir: v[2],
                etd: v[3],
                tpd: v[4],
                sep: v[5],
                users: parse(&p, &rec, 9)?,
                explained: parse(&p, &rec, 10)?,
                unexplained: parse(&p, &rec, 11)?,
            })
        } else {
            None
        };
        t.rows.push(ResultRow {
            model: core(&p, &rec, rec[0].parse())?,
            scorer: core(&p, &rec, rec[1].parse())?,
            k: parse(&p, &rec, 2)?,
            metrics,
            folds: parse(&p, &rec, 12)?,
        });
    }
    let p = dir.join("ranking.csv");
    for rec in records(&p)? {
        let values = if rec.get(9) == Some("ok") {
            let v: Vec<f64> = (2..8).map(|i| parse(&p, &rec, i)).collect::<Result<_>>()?;
            Some(core::array::from_fn(|i| v[i]))
        } else {
            None
        };
        t.ranking.push(RankingRow {
            model: core(&p, &rec, rec[0].parse())?,
            k: parse(&p, &rec, 1)?,
            values,
            folds: parse(&p, &rec, 8)?,
        });
    }
    let p = dir.join("significance.csv");
    for rec in records(&p)? {
        let metric = METRIC_NAMES.iter().copied().find(|m| *m == &rec[2]).ok_or_else(|| Error::Parse {
            path: p.clone(),
            line: rec.position().map_or(0, |x| x.line()),
            msg: format!("unknown metric `{}`", &rec[2]),
        })?;
        let result = if rec.get(6).is_some_and(|s| !s.is_empty()) {
            Some(WilcoxonResult {
                n: parse(&p, &rec, 6)?,
                statistic: parse(&p, &rec, 7)?,
                p_value: parse(&p, &rec, 8)?,
                exact: parse(&p, &rec, 9)?,
                degenerate: parse(&p, &rec, 10)?,
            })
        } else {
            None
        };
        t.tests.push(SignificanceTest {
            model: core(&p, &rec, rec[0].parse())?,
            k: parse(&p, &rec, 1)?,
            metric,
            a: core(&p, &rec, rec[3].parse())?,
            b: core(&p, &rec, rec[4].parse())?,
            pairs: parse(&p, &rec, 5)?,
            result,
        });
    }
    let p = dir.join("filter.csv");
    if p.exists() {
        let recs = records(&p)?;
        if recs.len() == 2 {
            t.stats = FilterStats {
                users_before: parse(&p, &recs[0], 1)?,
                items_before: parse(&p, &recs[0], 2)?,
                ratings_before: parse(&p, &recs[0], 3)?,
                users: parse(&p, &recs[1], 1)?,
                items: parse(&p, &recs[1], 2)?,
                ratings: parse(&p, &recs[1], 3)?,
            };
        }
    }
    let p = dir.join("errors.csv");
    if p.exists() {
        for rec in records(&p)? {
            t.errors.push(StageError {
                fold: rec[0].parse().ok(),
                model: rec[1].parse().ok(),
                scorer: rec[2].parse().ok(),
                stage: rec[3].to_owned(),
                message: rec[4].to_owned(),
            });
        }
    }
    Ok(t)
}

/// Decimal places per path metric (counts get one, means four).
fn path_decimals(metric: &str) -> usize {
    if matches!(metric, "TID" | "TPD") {
        1
    } else {
        4
    }
}

fn ordered<T: Copy + Ord>(xs: impl Iterator<Item = T>) -> Vec<T> {
    let mut seen = BTreeSet::new();
    xs.filter(|x| seen.insert(*x)).collect()
}

fn cell(text: String, bold: bool, underline: bool) -> String {
    let text = if bold { format!("**{text}**") } else { text };
    if underline {
        format!("<u>{text}</u>")
    } else {
        text
    }
}

/// Bold flags: the maximum (or minimum when `lower_better`) of each value
/// present. Ties are all marked.
fn best(values: &[Option<f64>], lower_better: bool) -> Vec<bool> {
    let present = values.iter().flatten().copied();
    let target = if lower_better { present.min_by(f64::total_cmp) } else { present.max_by(f64::total_cmp) };
    values.iter().map(|v| v.is_some() && *v == target).collect()
}

fn not_significant(test: Option<&SignificanceTest>) -> bool {
    test.and_then(|t| t.result).is_some_and(|r| r.p_value > SIGNIFICANCE_LEVEL)
}

pub fn render_markdown(t: &ResultsTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Offline evaluation\n");
    let f = &t.stats;
    if f.ratings_before > 0 {
        let _ = writeln!(
            s,
            "Coverage filter: {} of {} users, {} of {} items, {} of {} interactions kept.\n",
            f.users, f.users_before, f.items, f.items_before, f.ratings, f.ratings_before
        );
    }
    let _ = writeln!(
        s,
        "Bold: best value per recommender. Underlined: best value and a value not significantly different from it (Wilcoxon p > {SIGNIFICANCE_LEVEL}).\n"
    );
    let models = ordered(t.rows.iter().map(|r| r.model));
    let scorers: Vec<ScorerKind> = ordered(t.rows.iter().map(|r| r.scorer));
    for k in ordered(t.rows.iter().map(|r| r.k)) {
        let _ = writeln!(s, "## Path metrics, top-{k}\n");
        let _ = writeln!(s, "| Recommender | Explainer | {} |", METRIC_NAMES.join(" | "));
        let _ = writeln!(s, "|---|---|{}", "---:|".repeat(METRIC_NAMES.len()));
        for &model in &models {
            let metrics: Vec<Option<PathMetrics>> = scorers
                .iter()
                .map(|&sc| t.rows.iter().find(|r| r.model == model && r.scorer == sc && r.k == k).and_then(|r| r.metrics))
                .collect();
            let mut table: Vec<Vec<String>> = vec![Vec::new(); scorers.len()];
            for (mi, metric) in METRIC_NAMES.iter().enumerate() {
                let col: Vec<Option<f64>> = metrics.iter().map(|m| m.map(|m| m.values()[mi])).collect();
                let bold = best(&col, false);
                let mut under = vec![false; scorers.len()];
                for (bi, _) in bold.iter().enumerate().filter(|(_, b)| **b) {
                    for (oi, _) in bold.iter().enumerate().filter(|(_, b)| !**b) {
                        if col[oi].is_some() && not_significant(t.test(model, k, metric, scorers[bi], scorers[oi])) {
                            under[bi] = true;
                            under[oi] = true;
                        }
                    }
                }
                for (si, v) in col.iter().enumerate() {
                    let text = v.map_or("n/a".to_owned(), |v| format!("{v:.*}", path_decimals(metric)));
                    table[si].push(cell(text, bold[si], under[si]));
                }
            }
            for (si, sc) in scorers.iter().enumerate() {
                let name = if si == 0 { model.display() } else { "" };
                let _ = writeln!(s, "| {name} | {} | {} |", sc.display(), table[si].join(" | "));
            }
        }
        let _ = writeln!(s);
    }

    let rank_models: Vec<ModelKind> = ordered(t.ranking.iter().map(|r| r.model));
    for k in ordered(t.ranking.iter().map(|r| r.k)) {
        let _ = writeln!(s, "## Ranking metrics, top-{k}\n");
        let _ = writeln!(s, "| Recommender | {} |", RankingMetrics::NAMES.join(" | "));
        let _ = writeln!(s, "|---|{}", "---:|".repeat(RankingMetrics::NAMES.len()));
        let rows: Vec<Option<[f64; 6]>> = rank_models
            .iter()
            .map(|&m| t.ranking.iter().find(|r| r.model == m && r.k == k).and_then(|r| r.values))
            .collect();
        let bold: Vec<Vec<bool>> = (0..6)
            .map(|i| best(&rows.iter().map(|r| r.map(|v| v[i])).collect::<Vec<_>>(), RankingMetrics::NAMES[i] == "Gini"))
            .collect();
        for (ri, m) in rank_models.iter().enumerate() {
            let cells: Vec<String> = (0..6)
                .map(|i| {
                    let digits = if RankingMetrics::NAMES[i] == "AGG-DIV" { 1 } else { 4 };
                    let text = rows[ri].map_or("n/a".to_owned(), |v| format!("{:.*}", digits, v[i]));
                    cell(text, bold[i][ri], false)
                })
                .collect();
            let _ = writeln!(s, "| {} | {} |", m.display(), cells.join(" | "));
        }
        let _ = writeln!(s);
    }

    if !t.errors.is_empty() {
        let _ = writeln!(s, "## Errors\n");
        for e in &t.errors {
            let fold = e.fold.map_or("-".to_owned(), |f| f.to_string());
            let model = e.model.map_or("-", ModelKind::as_str);
            let scorer = e.scorer.map_or("-", ScorerKind::as_str);
            let _ = writeln!(s, "- fold {fold}, {model}, {scorer}, {}: {}", e.stage, e.message);
        }
        let _ = writeln!(s);
    }
    s
}
