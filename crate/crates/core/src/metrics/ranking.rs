//! Accuracy and beyond-accuracy ranking metrics with binary relevance.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// NDCG@k for one user. IDCG covers `min(k, |relevant|)` hits.
/// `None` when the user has no relevant items.
pub fn ndcg_at(ranked: &[&str], relevant: &BTreeSet<&str>, k: usize) -> Option<f64> {
    if relevant.is_empty() || k == 0 {
        return None;
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| relevant.contains(*i))
        .map(|(r, _)| 1.0 / log2(r as f64 + 2.0))
        .sum();
    let idcg: f64 = (0..k.min(relevant.len())).map(|r| 1.0 / log2(r as f64 + 2.0)).sum();
    Some(dcg / idcg)
}

/// AP@k for one user, normalised by `min(k, |relevant|)`.
pub fn ap_at(ranked: &[&str], relevant: &BTreeSet<&str>, k: usize) -> Option<f64> {
    if relevant.is_empty() || k == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, i) in ranked.iter().take(k).enumerate() {
        if relevant.contains(i) {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    Some(sum / k.min(relevant.len()) as f64)
}

/// Per-item exposure counts over the top-k of every list.
pub fn exposure<'a>(lists: impl IntoIterator<Item = &'a [&'a str]>, k: usize) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for l in lists {
        for i in l.iter().take(k) {
            *counts.entry(*i).or_insert(0) += 1;
        }
    }
    counts
}

/// Shannon entropy (natural log) of the exposure distribution.
pub fn entropy(counts: &BTreeMap<&str, usize>) -> f64 {
    let total: usize = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * libm::log(p)
        })
        .sum()
}

/// Gini index of exposure over the whole catalog; items never recommended
/// count as zero exposure. 0 for perfectly even exposure, approaching 1
/// when a single item takes everything.
pub fn gini(counts: &BTreeMap<&str, usize>, catalog_size: usize) -> Result<f64> {
    if catalog_size == 0 {
        return Err(Error::Empty("catalog"));
    }
    if counts.len() > catalog_size {
        return Err(Error::InvalidParam {
            name: "catalog_size".into(),
            reason: "smaller than the number of exposed items".into(),
        });
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Ok(0.0);
    }
    let n = catalog_size;
    let mut xs: Vec<usize> = counts.values().copied().collect();
    xs.resize(n, 0);
    xs.sort_unstable();
    let t = total as f64;
    let s: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * (i + 1) as f64 - n as f64 - 1.0) * x as f64)
        .sum();
    Ok(s / (n as f64 * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RankingMetrics {
    pub ndcg: f64,
    pub map: f64,
    pub agg_div: usize,
    pub entropy: f64,
    pub gini: f64,
    pub coverage: f64,
    /// Users entering the NDCG/MAP means.
    pub evaluated_users: usize,
}

impl RankingMetrics {
    pub const NAMES: [&'static str; 6] = ["NDCG", "MAP", "AGG-DIV", "Entropy", "Gini", "Coverage"];

    pub fn values(&self) -> [f64; 6] {
        [self.ndcg, self.map, self.agg_div as f64, self.entropy, self.gini, self.coverage]
    }
}

/// All six ranking metrics at cutoff `k`.
///
/// `recs` maps user → ranked list; `test` maps user → held-out items.
/// Users with empty test sets are left out of the NDCG/MAP means.
pub fn ranking_metrics(
    recs: &BTreeMap<String, Vec<String>>,
    test: &BTreeMap<String, BTreeSet<String>>,
    catalog_size: usize,
    k: usize,
) -> Result<RankingMetrics> {
    if k == 0 {
        return Err(Error::InvalidParam { name: "k".into(), reason: "must be >= 1".into() });
    }
    let lists: Vec<Vec<&str>> = recs.values().map(|l| l.iter().map(String::as_str).collect()).collect();
    let (mut nd, mut ap, mut n) = (0.0, 0.0, 0usize);
    for ((user, _), list) in recs.iter().zip(&lists) {
        let Some(rel) = test.get(user) else { continue };
        let rel: BTreeSet<&str> = rel.iter().map(String::as_str).collect();
        if let (Some(a), Some(b)) = (ndcg_at(list, &rel, k), ap_at(list, &rel, k)) {
            nd += a;
            ap += b;
            n += 1;
        }
    }
    let counts = exposure(lists.iter().map(Vec::as_slice), k);
    let agg_div = counts.len();
    Ok(RankingMetrics {
        ndcg: if n > 0 { nd / n as f64 } else { 0.0 },
        map: if n > 0 { ap / n as f64 } else { 0.0 },
        agg_div,
        entropy: entropy(&counts),
        gini: gini(&counts, catalog_size)?,
        coverage: agg_div as f64 / catalog_size as f64,
        evaluated_users: n,
    })
}
