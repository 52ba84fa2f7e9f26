//! Path metrics over explanation lists.
//!
//! Per user: SEP (popularity of shown attributes), LIR (recency of linked
//! items), ETD (attribute diversity) and MID (distinct linked items).
//! Across users: TID and TPD (distinct linked items / attributes over every
//! explanation).
//!
//! SEP and LIR read values off an [`EwmaProfile`]: entities sorted ascending
//! by their raw value, min-max normalised, then smoothed with
//! `s_i = (1 - β)·s_{i-1} + β·v_i`, `s_1 = v_1` (evaluated as
//! `s_{i-1} + β·(v_i - s_{i-1})`).

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::explain::Explanation;
use crate::kg::KnowledgeGraph;

/// Smoothing used unless configured otherwise.
pub const DEFAULT_BETA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct EwmaEntry {
    pub entity: String,
    pub raw: f64,
    pub normalized: f64,
    pub ewma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EwmaProfile {
    entries: Vec<EwmaEntry>,
    index: BTreeMap<String, usize>,
    beta: f64,
}

impl EwmaProfile {
    pub fn entries(&self) -> &[EwmaEntry] {
        &self.entries
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn value(&self, entity: &str) -> Option<f64> {
        self.index.get(entity).map(|&i| self.entries[i].ewma)
    }
}

/// Builds the smoothed profile. Equal raw values are ordered by entity id.
/// When every raw value is equal the normalised values are all 0.5.
pub fn build_ewma_profile(values: &[(String, f64)], beta: f64) -> Result<EwmaProfile> {
    if values.is_empty() {
        return Err(Error::Empty("ewma profile values"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParam { name: "beta".into(), reason: "must lie in (0, 1)".into() });
    }
    let mut sorted: Vec<(String, f64)> = values.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let min = sorted[0].1;
    let max = sorted[sorted.len() - 1].1;
    let mut entries = Vec::with_capacity(sorted.len());
    let mut prev = 0.0;
    for (i, (entity, raw)) in sorted.into_iter().enumerate() {
        let normalized = if max > min { (raw - min) / (max - min) } else { 0.5 };
        let ewma = if i == 0 { normalized } else { prev + beta * (normalized - prev) };
        prev = ewma;
        entries.push(EwmaEntry { entity, raw, normalized, ewma });
    }
    let index = entries.iter().enumerate().map(|(i, e)| (e.entity.clone(), i)).collect();
    Ok(EwmaProfile { entries, index, beta })
}

/// Mean of the values summed in ascending order.
pub fn sorted_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = xs.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

/// Shared Entity Popularity for one user.
///
/// The popularity profile covers `candidate_attrs` (the user's ω_L), with raw
/// values equal to each attribute's tail-reference count in `g`. Each
/// explanation contributes the mean smoothed value of its attributes; the
/// result is the mean over explanations. Explanations without attributes are
/// skipped. `None` when nothing contributes.
pub fn sep(
    g: &KnowledgeGraph,
    explanations: &[Explanation],
    candidate_attrs: &BTreeSet<String>,
    beta: f64,
) -> Result<Option<f64>> {
    let mut values: Vec<(String, f64)> = candidate_attrs
        .iter()
        .map(|a| Ok((a.clone(), g.attribute_popularity(a)? as f64)))
        .collect::<Result<_>>()?;
    for e in explanations {
        for a in &e.attributes {
            if !candidate_attrs.contains(&a.id) {
                values.push((a.id.clone(), g.attribute_popularity(&a.id)? as f64));
            }
        }
    }
    if values.is_empty() {
        return Ok(None);
    }
    values.sort_by(|a, b| a.0.cmp(&b.0));
    values.dedup_by(|a, b| a.0 == b.0);
    let profile = build_ewma_profile(&values, beta)?;
    Ok(mean(explanations.iter().filter_map(|e| {
        mean(e.attributes.iter().filter_map(|a| profile.value(&a.id)))
    })))
}

/// Linking Interaction Recency for one user.
///
/// `history` holds the user's interacted items with their recency key
/// (timestamp, or listen weight). Linking an item absent from the history is
/// an integrity violation.
pub fn lir(
    user: &str,
    history: &[(String, f64)],
    explanations: &[Explanation],
    beta: f64,
) -> Result<Option<f64>> {
    if explanations.iter().all(|e| e.linked_items.is_empty()) {
        return Ok(None);
    }
    let profile = build_ewma_profile(history, beta)?;
    let mut per_expl = Vec::with_capacity(explanations.len());
    for e in explanations {
        let mut vals = Vec::with_capacity(e.linked_items.len());
        for item in &e.linked_items {
            let v = profile.value(item).ok_or_else(|| Error::IntegrityViolation {
                user: user.to_owned(),
                item: item.clone(),
            })?;
            vals.push(v);
        }
        if let Some(m) = mean(vals.into_iter()) {
            per_expl.push(m);
        }
    }
    Ok(mean(per_expl.into_iter()))
}

/// Explanation Type Diversity: distinct primary attributes over
/// `min(k, |ω_L|)`.
pub fn etd(explanations: &[Explanation], k: usize, candidate_count: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParam { name: "k".into(), reason: "must be >= 1".into() });
    }
    if candidate_count == 0 {
        return Err(Error::Empty("candidate attribute set"));
    }
    let unique: BTreeSet<&str> = explanations.iter().filter_map(Explanation::primary).collect();
    Ok(unique.len() as f64 / k.min(candidate_count) as f64)
}

/// Mean Item Diversity for one user: distinct linked items over the list.
pub fn mid(explanations: &[Explanation]) -> usize {
    explanations
        .iter()
        .flat_map(|e| e.linked_items.iter().map(String::as_str))
        .collect::<BTreeSet<&str>>()
        .len()
}

/// (TID, TPD): distinct linked items and distinct shown attributes across
/// every explanation of every user.
pub fn tid_tpd<'a>(all: impl IntoIterator<Item = &'a Explanation>) -> (usize, usize) {
    let mut items = BTreeSet::new();
    let mut attrs = BTreeSet::new();
    for e in all {
        items.extend(e.linked_items.iter().map(String::as_str));
        attrs.extend(e.attributes.iter().map(|a| a.id.as_str()));
    }
    (items.len(), attrs.len())
}

/// Everything needed to score one user's explanation list.
#[derive(Debug, Clone, PartialEq)]
pub struct UserExplanations {
    pub user: String,
    pub explanations: Vec<Explanation>,
    /// ω_L: union of candidate attributes over the user's recommendations.
    pub candidate_attrs: BTreeSet<String>,
    /// Interacted items with their recency keys.
    pub history: Vec<(String, f64)>,
    /// Recommendations that could not be explained.
    pub unexplained: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserMetricRow {
    pub user: String,
    pub sep: f64,
    pub lir: f64,
    pub etd: f64,
    pub mid: f64,
    pub shown_items: BTreeSet<String>,
    pub shown_attrs: BTreeSet<String>,
}

/// Per-user metrics. `None` when the user has no explanation.
pub fn user_row(
    g: &KnowledgeGraph,
    u: &UserExplanations,
    k: usize,
    beta: f64,
) -> Result<Option<UserMetricRow>> {
    if u.explanations.is_empty() {
        return Ok(None);
    }
    let sep = sep(g, &u.explanations, &u.candidate_attrs, beta)?.unwrap_or(0.0);
    let lir = lir(&u.user, &u.history, &u.explanations, beta)?.unwrap_or(0.0);
    let etd = etd(&u.explanations, k, u.candidate_attrs.len())?;
    let mut shown_items = BTreeSet::new();
    let mut shown_attrs = BTreeSet::new();
    for e in &u.explanations {
        shown_items.extend(e.linked_items.iter().cloned());
        shown_attrs.extend(e.attributes.iter().map(|a| a.id.clone()));
    }
    Ok(Some(UserMetricRow {
        user: u.user.clone(),
        sep,
        lir,
        etd,
        mid: shown_items.len() as f64,
        shown_items,
        shown_attrs,
    }))
}

/// The six metrics over a set of users.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathMetrics {
    pub mid: f64,
    pub tid: f64,
    pub lir: f64,
    pub etd: f64,
    pub tpd: f64,
    pub sep: f64,
    /// Users with at least one explanation.
    pub users: usize,
    pub explained: usize,
    pub unexplained: usize,
}

impl PathMetrics {
    pub const NAMES: [&'static str; 6] = ["MID", "TID", "LIR", "ETD", "TPD", "SEP"];

    pub fn values(&self) -> [f64; 6] {
        [self.mid, self.tid, self.lir, self.etd, self.tpd, self.sep]
    }

    /// Element-wise mean (folds). Counts are summed. Values are summed in
    /// sorted order so the result does not depend on fold order.
    pub fn mean_of(parts: &[PathMetrics]) -> PathMetrics {
        if parts.is_empty() {
            return PathMetrics::default();
        }
        let avg = |f: fn(&PathMetrics) -> f64| sorted_mean(parts.iter().map(f));
        PathMetrics {
            mid: avg(|p| p.mid),
            tid: avg(|p| p.tid),
            lir: avg(|p| p.lir),
            etd: avg(|p| p.etd),
            tpd: avg(|p| p.tpd),
            sep: avg(|p| p.sep),
            users: parts.iter().map(|p| p.users).sum(),
            explained: parts.iter().map(|p| p.explained).sum(),
            unexplained: parts.iter().map(|p| p.unexplained).sum(),
        }
    }
}

/// Aggregates per-user rows: SEP, LIR, ETD and MID are means over users,
/// TID and TPD are union cardinalities.
pub fn aggregate(rows: &[UserMetricRow], explained: usize, unexplained: usize) -> PathMetrics {
    let n = rows.len();
    if n == 0 {
        return PathMetrics { explained, unexplained, ..PathMetrics::default() };
    }
    let avg = |f: fn(&UserMetricRow) -> f64| rows.iter().map(f).sum::<f64>() / n as f64;
    let items: BTreeSet<&str> = rows.iter().flat_map(|r| r.shown_items.iter().map(String::as_str)).collect();
    let attrs: BTreeSet<&str> = rows.iter().flat_map(|r| r.shown_attrs.iter().map(String::as_str)).collect();
    PathMetrics {
        mid: avg(|r| r.mid),
        tid: items.len() as f64,
        lir: avg(|r| r.lir),
        etd: avg(|r| r.etd),
        tpd: attrs.len() as f64,
        sep: avg(|r| r.sep),
        users: n,
        explained,
        unexplained,
    }
}
