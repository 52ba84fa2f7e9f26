//! Implicit-feedback recommenders behind one interface.
//!
//! Every model scores the whole training catalog for a user; [`Model`]
//! handles exclusion of the user's training items, the deterministic
//! ordering (score descending, item id ascending) and the cold-start
//! fallback to popularity.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

mod bpr;
mod ease;
mod most_pop;
mod pagerank;
mod user_knn;

pub use bpr::{BprMf, BprParams};
pub use ease::Ease;
pub use most_pop::MostPop;
pub use pagerank::{personalized_pagerank, restart_vector, PageRank, PageRankParams};
pub use user_knn::UserKnn;

/// Users and items of a training set, interned in id order.
#[derive(Debug, Clone)]
pub struct InteractionMatrix {
    users: Vec<String>,
    items: Vec<String>,
    user_index: BTreeMap<String, u32>,
    item_index: BTreeMap<String, u32>,
    user_items: Vec<Vec<u32>>,
    item_users: Vec<Vec<u32>>,
}

impl InteractionMatrix {
    pub fn from_dataset(d: &Dataset) -> Self {
        let users: Vec<String> = d.users().into_iter().map(str::to_owned).collect();
        let items: Vec<String> = d.items().into_iter().map(str::to_owned).collect();
        let user_index: BTreeMap<String, u32> =
            users.iter().enumerate().map(|(i, u)| (u.clone(), i as u32)).collect();
        let item_index: BTreeMap<String, u32> =
            items.iter().enumerate().map(|(i, u)| (u.clone(), i as u32)).collect();
        let mut user_items = alloc::vec![Vec::new(); users.len()];
        let mut item_users = alloc::vec![Vec::new(); items.len()];
        for it in d.interactions() {
            let u = user_index[&it.user];
            let i = item_index[&it.item];
            user_items[u as usize].push(i);
            item_users[i as usize].push(u);
        }
        for v in user_items.iter_mut().chain(item_users.iter_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        InteractionMatrix { users, items, user_index, item_index, user_items, item_users }
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn user(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).map(|&u| u as usize)
    }

    pub fn item(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).map(|&i| i as usize)
    }

    pub fn user_id(&self, u: usize) -> &str {
        &self.users[u]
    }

    pub fn item_id(&self, i: usize) -> &str {
        &self.items[i]
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// Distinct items of a user, ascending.
    pub fn user_items(&self, u: usize) -> &[u32] {
        &self.user_items[u]
    }

    pub fn item_users(&self, i: usize) -> &[u32] {
        &self.item_users[i]
    }

    /// Number of distinct users per item.
    pub fn item_popularity(&self) -> Vec<f64> {
        self.item_users.iter().map(|u| u.len() as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    MostPop,
    UserKnn,
    PageRank,
    BprMf,
    Ease,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::MostPop,
        ModelKind::UserKnn,
        ModelKind::PageRank,
        ModelKind::BprMf,
        ModelKind::Ease,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::MostPop => "most_pop",
            ModelKind::UserKnn => "user_knn",
            ModelKind::PageRank => "pagerank",
            ModelKind::BprMf => "bpr_mf",
            ModelKind::Ease => "ease",
        }
    }

    /// Display name used in reports.
    pub fn display(self) -> &'static str {
        match self {
            ModelKind::MostPop => "MostPop",
            ModelKind::UserKnn => "UserKNN",
            ModelKind::PageRank => "PageRank",
            ModelKind::BprMf => "BPR-MF",
            ModelKind::Ease => "EASE",
        }
    }

    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            ModelKind::MostPop => &[],
            ModelKind::UserKnn => &["k"],
            ModelKind::PageRank => &["damping", "profile_mass", "max_iter", "tol"],
            ModelKind::BprMf => &[
                "factors",
                "learning_rate",
                "epochs",
                "regularization",
                "init_std",
                "negatives",
            ],
            ModelKind::Ease => &["lambda"],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParam {
                name: "model".into(),
                reason: alloc::format!("unknown model kind `{s}`"),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub params: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec { kind, params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_owned(), value);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let allowed = self.kind.allowed_params();
        for (k, v) in &self.params {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::InvalidParam {
                    name: k.clone(),
                    reason: alloc::format!("not a parameter of {}", self.kind),
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidParam { name: k.clone(), reason: "not finite".into() });
            }
        }
        Ok(())
    }

    pub(crate) fn get(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub(crate) fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key).unwrap_or(default);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::InvalidParam { name: key.into(), reason: alloc::format!("must be > 0, got {v}") })
        }
    }

    pub(crate) fn count(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) if v >= 1.0 && libm::trunc(v) == v => Ok(v as usize),
            Some(v) => Err(Error::InvalidParam {
                name: key.into(),
                reason: alloc::format!("must be a positive integer, got {v}"),
            }),
        }
    }

    pub(crate) fn unit(&self, key: &str, default: f64, open: bool) -> Result<f64> {
        let v = self.get(key).unwrap_or(default);
        let ok = if open { v > 0.0 && v < 1.0 } else { (0.0..=1.0).contains(&v) };
        if ok {
            Ok(v)
        } else {
            Err(Error::InvalidParam { name: key.into(), reason: alloc::format!("out of range: {v}") })
        }
    }
}

/// A fitted scoring function over the training catalog.
pub trait Recommender: Send + Sync {
    fn kind(&self) -> &'static str;

    /// One score per catalog item (indexed as in the [`InteractionMatrix`])
    /// for a known user.
    fn scores(&self, matrix: &InteractionMatrix, user: usize) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: String,
    pub items: Vec<(String, f64)>,
    pub k: usize,
    /// Set when the user was unknown and the popularity list was served.
    pub fallback: bool,
}

impl RankedList {
    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(i, _)| i.as_str())
    }
}

/// A fitted model ready to produce ranked lists.
pub struct Model {
    matrix: InteractionMatrix,
    scorer: Box<dyn Recommender>,
    popularity: Vec<f64>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("kind", &self.scorer.kind())
            .field("users", &self.matrix.n_users())
            .field("items", &self.matrix.n_items())
            .finish()
    }
}

impl Model {
    /// Wraps any [`Recommender`], e.g. one defined outside this crate.
    pub fn from_parts(matrix: InteractionMatrix, scorer: Box<dyn Recommender>) -> Self {
        let popularity = matrix.item_popularity();
        Model { matrix, scorer, popularity }
    }

    pub fn matrix(&self) -> &InteractionMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> &'static str {
        self.scorer.kind()
    }

    pub fn scorer(&self) -> &dyn Recommender {
        self.scorer.as_ref()
    }

    pub fn recommend(&self, user: &str, k: usize) -> RankedList {
        match self.matrix.user(user) {
            Some(u) => {
                let scores = self.scorer.scores(&self.matrix, u);
                RankedList {
                    user: user.to_owned(),
                    items: top_k(&self.matrix, &scores, self.matrix.user_items(u), k),
                    k,
                    fallback: false,
                }
            }
            None => RankedList {
                user: user.to_owned(),
                items: top_k(&self.matrix, &self.popularity, &[], k),
                k,
                fallback: true,
            },
        }
    }
}

/// Best `k` items by score, ties on ascending item id, skipping `exclude`
/// (sorted item indices).
pub(crate) fn top_k(
    m: &InteractionMatrix,
    scores: &[f64],
    exclude: &[u32],
    k: usize,
) -> Vec<(String, f64)> {
    let mut cand: Vec<(usize, f64)> = scores
        .iter()
        .copied()
        .enumerate()
        .filter(|(i, _)| exclude.binary_search(&(*i as u32)).is_err())
        .collect();
    // item indices follow id order, so index order is the id tie-break
    let cmp = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if cand.len() > k && k > 0 {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand.truncate(k);
    cand.into_iter().map(|(i, s)| (m.item_id(i).to_owned(), s)).collect()
}

/// Fits a model of the given kind on `train`. Deterministic given `seed`.
pub fn fit(
    spec: &ModelSpec,
    train: &Dataset,
    g: Option<&KnowledgeGraph>,
    seed: u64,
) -> Result<Model> {
    spec.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let matrix = InteractionMatrix::from_dataset(train);
    let scorer: Box<dyn Recommender> = match spec.kind {
        ModelKind::MostPop => Box::new(MostPop::fit(&matrix)),
        ModelKind::UserKnn => {
            let default_k = libm::ceil(libm::sqrt(matrix.n_users() as f64)) as usize;
            Box::new(UserKnn::fit(&matrix, spec.count("k", default_k.max(1))?))
        }
        ModelKind::PageRank => {
            let g = g.ok_or(Error::MissingGraph("pagerank"))?;
            Box::new(PageRank::fit(&matrix, g, PageRankParams::from_spec(spec)?))
        }
        ModelKind::BprMf => Box::new(BprMf::fit(&matrix, BprParams::from_spec(spec)?, seed).0),
        ModelKind::Ease => Box::new(Ease::fit(&matrix, spec.positive("lambda", 500.0)?)?),
    };
    Ok(Model::from_parts(matrix, scorer))
}
