//! User-item interactions and the preprocessing steps applied before
//! training: KG-coverage filtering, binarization, per-user k-fold splitting,
//! and the popularity x entropy ranking used to build an elicitation catalog.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

/// Entropy assigned to items whose rating histogram has a single bin.
pub const DEGENERATE_ENTROPY: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub rating: Option<f64>,
    /// Epoch seconds.
    pub timestamp: Option<i64>,
    /// Non-negative listen count (LastFM style).
    pub weight: Option<f64>,
}

impl Interaction {
    pub fn new(user: impl Into<String>, item: impl Into<String>) -> Self {
        Interaction {
            user: user.into(),
            item: item.into(),
            rating: None,
            timestamp: None,
            weight: None,
        }
    }

    pub fn with_rating(mut self, r: f64) -> Self {
        self.rating = Some(r);
        self
    }

    pub fn with_timestamp(mut self, t: i64) -> Self {
        self.timestamp = Some(t);
        self
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.weight = Some(w);
        self
    }
}

/// Which field orders a user's history from oldest to most recent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecencyMode {
    #[default]
    Timestamp,
    /// Listen count stands in for recency: heavier means "more recent".
    Weight,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    interactions: Vec<Interaction>,
    recency_mode: RecencyMode,
}

impl Dataset {
    /// Validates that each interaction carries the field its recency mode
    /// needs and that weights are non-negative.
    pub fn new(interactions: Vec<Interaction>, recency_mode: RecencyMode) -> Result<Self> {
        for it in &interactions {
            if it.user.is_empty() || it.item.is_empty() {
                return Err(Error::InvalidParam {
                    name: "interaction".into(),
                    reason: "empty user or item id".into(),
                });
            }
            let ok = match recency_mode {
                RecencyMode::Timestamp => it.timestamp.is_some(),
                RecencyMode::Weight => it.weight.is_some(),
            };
            if !ok {
                return Err(Error::InvalidParam {
                    name: "interaction".into(),
                    reason: alloc::format!(
                        "({}, {}) lacks the {:?} field",
                        it.user,
                        it.item,
                        recency_mode
                    ),
                });
            }
            if let Some(w) = it.weight {
                if w.is_nan() || w < 0.0 {
                    return Err(Error::InvalidParam {
                        name: "weight".into(),
                        reason: alloc::format!("negative or NaN weight {w}"),
                    });
                }
            }
        }
        Ok(Dataset { interactions, recency_mode })
    }

    fn with_same_mode(&self, interactions: Vec<Interaction>) -> Self {
        Dataset { interactions, recency_mode: self.recency_mode }
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    pub fn recency_mode(&self) -> RecencyMode {
        self.recency_mode
    }

    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn users(&self) -> BTreeSet<&str> {
        self.interactions.iter().map(|i| i.user.as_str()).collect()
    }

    pub fn items(&self) -> BTreeSet<&str> {
        self.interactions.iter().map(|i| i.item.as_str()).collect()
    }

    /// Recency key of an interaction under this dataset's mode.
    pub fn recency(&self, it: &Interaction) -> f64 {
        match self.recency_mode {
            RecencyMode::Timestamp => it.timestamp.unwrap_or(0) as f64,
            RecencyMode::Weight => it.weight.unwrap_or(0.0),
        }
    }

    /// Each user's interactions, in file order.
    pub fn by_user(&self) -> BTreeMap<&str, Vec<&Interaction>> {
        let mut out: BTreeMap<&str, Vec<&Interaction>> = BTreeMap::new();
        for it in &self.interactions {
            out.entry(it.user.as_str()).or_default().push(it);
        }
        out
    }

    /// Recency value per (user, item). Repeated pairs keep the maximum.
    pub fn recency_index(&self) -> BTreeMap<(&str, &str), f64> {
        let mut out: BTreeMap<(&str, &str), f64> = BTreeMap::new();
        for it in &self.interactions {
            let r = self.recency(it);
            out.entry((it.user.as_str(), it.item.as_str()))
                .and_modify(|v| {
                    if r > *v {
                        *v = r
                    }
                })
                .or_insert(r);
        }
        out
    }

    /// Keeps interactions whose item has at least one triple in `g`. Users
    /// left without interactions disappear with them.
    pub fn filter_by_kg_coverage(&self, g: &KnowledgeGraph) -> Dataset {
        self.with_same_mode(
            self.interactions
                .iter()
                .filter(|it| g.covers(&it.item))
                .cloned()
                .collect(),
        )
    }

    /// Every interaction becomes an implicit positive, whatever its rating.
    pub fn binarize(&self) -> Dataset {
        self.with_same_mode(
            self.interactions
                .iter()
                .cloned()
                .map(|mut it| {
                    it.rating = Some(1.0);
                    it
                })
                .collect(),
        )
    }

    /// Per-user stratified k-fold partition.
    ///
    /// Each user's interactions are shuffled with a generator seeded from
    /// `seed`, then dealt round-robin into the k folds. A user with fewer
    /// than k interactions appears in fewer test folds.
    pub fn kfold_split(&self, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
        if k < 2 {
            return Err(Error::InvalidFoldCount(k));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fold_of = alloc::vec![0usize; self.interactions.len()];
        let mut per_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (idx, it) in self.interactions.iter().enumerate() {
            per_user.entry(it.user.as_str()).or_default().push(idx);
        }
        for idxs in per_user.values_mut() {
            idxs.shuffle(&mut rng);
            for (pos, &idx) in idxs.iter().enumerate() {
                fold_of[idx] = pos % k;
            }
        }
        Ok((0..k)
            .map(|f| {
                let (mut train, mut test) = (Vec::new(), Vec::new());
                for (idx, it) in self.interactions.iter().enumerate() {
                    if fold_of[idx] == f {
                        test.push(it.clone());
                    } else {
                        train.push(it.clone());
                    }
                }
                FoldSplit {
                    fold_index: f,
                    train: self.with_same_mode(train),
                    test: self.with_same_mode(test),
                }
            })
            .collect())
    }

    /// Items scored by `log10(popularity * entropy)`, best first, truncated
    /// to `top`. Popularity is the number of ratings; entropy is the Shannon
    /// entropy (bits) of the item's rating histogram. Items without ratings
    /// are ignored. Ties break on item id.
    pub fn elicitation_ranking(&self, top: usize) -> Vec<(String, f64)> {
        let mut hist: BTreeMap<&str, BTreeMap<u64, usize>> = BTreeMap::new();
        for it in &self.interactions {
            if let Some(r) = it.rating {
                *hist
                    .entry(it.item.as_str())
                    .or_default()
                    .entry(r.to_bits())
                    .or_default() += 1;
            }
        }
        let mut scored: Vec<(String, f64)> = hist
            .into_iter()
            .map(|(item, bins)| {
                let pop: usize = bins.values().sum();
                let mut h = 0.0;
                for &c in bins.values() {
                    let p = c as f64 / pop as f64;
                    h -= p * libm::log2(p);
                }
                if bins.len() < 2 {
                    h = DEGENERATE_ENTROPY;
                }
                (item.to_owned(), libm::log10(pop as f64 * h))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(top);
        scored
    }
}

/// Returns `items` in a random order determined by `seed`.
pub fn seeded_shuffle<T>(mut items: Vec<T>, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    items.shuffle(&mut rng);
    items
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train: Dataset,
    pub test: Dataset,
}
