//! Offline evaluation: fit each recommender per fold, explain its top-k
//! lists with each scorer and compute path and ranking metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use pathx_core::dataset::{Dataset, FoldSplit};
use pathx_core::explain::{
    build_explanation, candidate_attributes, rank_attributes, Explanation, ExplanationLimits, ScoreContext,
    ScorerKind, SentenceTemplate,
};
use pathx_core::kg::{KnowledgeGraph, NodeId};
use pathx_core::metrics::path::sorted_mean;
use pathx_core::metrics::{
    aggregate, ranking_metrics, user_row, wilcoxon_signed_rank, PathMetrics, RankingMetrics, UserExplanations,
    UserMetricRow, WilcoxonResult,
};
use pathx_core::recommenders::{fit, ModelKind, ModelSpec, RankedList};
use rayon::prelude::*;

use crate::config::{ItemSource, RunConfig};
use crate::error::{Error, Result};
use crate::io::export::{write_explanations, write_fold_manifest, write_recommendations, ExplanationRecord};
use crate::io::interactions::load_interactions;
use crate::io::triples::{load_graph, ItemMarker};
use crate::report;

/// Dataset size before and after the coverage filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterStats {
    pub users_before: usize,
    pub items_before: usize,
    pub ratings_before: usize,
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
}

pub struct Prepared {
    pub graph: KnowledgeGraph,
    /// Covered interactions with their original ratings.
    pub covered: Dataset,
    /// Covered, binarized interactions.
    pub data: Dataset,
    pub stats: FilterStats,
}

/// Loads the configured graph; `raw` supplies item ids when items are
/// taken from the interactions.
pub fn load_kg(cfg: &RunConfig, raw: &Dataset) -> Result<KnowledgeGraph> {
    let mut fmt = cfg.kg.format.clone();
    fmt.items = match &cfg.kg.items {
        ItemSource::Marker(m) => m.clone(),
        ItemSource::Interactions => ItemMarker::List(raw.items().into_iter().map(str::to_owned).collect()),
    };
    let labels = cfg.kg.labels.as_ref().map(|(p, f)| (p.as_path(), f));
    load_graph(&cfg.kg.path, &fmt, labels, cfg.kg.config.clone())
}

/// Loads the graph and interactions, keeps covered interactions and
/// binarizes them.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let raw = load_interactions(&cfg.dataset, &cfg.schema)?;
    let graph = load_kg(cfg, &raw)?;
    let filtered = raw.filter_by_kg_coverage(&graph);
    let stats = FilterStats {
        users_before: raw.users().len(),
        items_before: raw.items().len(),
        ratings_before: raw.len(),
        users: filtered.users().len(),
        items: filtered.items().len(),
        ratings: filtered.len(),
    };
    log::info!(
        "coverage filter kept {}/{} items, {}/{} interactions, {}/{} users",
        stats.items,
        stats.items_before,
        stats.ratings,
        stats.ratings_before,
        stats.users,
        stats.users_before
    );
    Ok(Prepared { graph, data: filtered.binarize(), covered: filtered, stats })
}

/// Outcome of explaining one recommended item.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainedItem {
    pub item: String,
    pub explanation: Option<Explanation>,
    /// Candidate attribute ids for this item.
    pub candidates: BTreeSet<String>,
}

/// A user's interaction history resolved against the graph.
pub struct UserHistory {
    pub items: Vec<(String, f64)>,
    nodes: Vec<NodeId>,
    recency: BTreeMap<NodeId, f64>,
}

impl UserHistory {
    pub fn new(g: &KnowledgeGraph, items: Vec<(String, f64)>) -> Self {
        let mut recency = BTreeMap::new();
        for (i, r) in &items {
            if let Some(n) = g.node(i).filter(|&n| g.is_item(n)) {
                recency.insert(n, *r);
            }
        }
        UserHistory { nodes: recency.keys().copied().collect(), items, recency }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }
}

/// Explains each item of `recs` separately against the user's history.
pub fn explain_items(
    g: &KnowledgeGraph,
    history: &UserHistory,
    recs: &[String],
    kind: ScorerKind,
    alpha: f64,
    template: &SentenceTemplate,
) -> Vec<ExplainedItem> {
    let recency = |n: NodeId| history.recency.get(&n).copied().unwrap_or(f64::NEG_INFINITY);
    recs.iter()
        .map(|item| {
            let ctx = g
                .node(item)
                .filter(|&n| g.is_item(n))
                .and_then(|n| ScoreContext::from_nodes(history.nodes.clone(), vec![n], alpha).ok());
            let Some(ctx) = ctx else {
                return ExplainedItem { item: item.clone(), explanation: None, candidates: BTreeSet::new() };
            };
            let candidates = candidate_attributes(g, &ctx, kind).into_iter().map(|a| g.name(a).to_owned()).collect();
            let ranked = rank_attributes(g, &ctx, kind);
            let explanation =
                build_explanation(g, &ctx, kind, &ranked, &recency, ExplanationLimits::default(), template);
            ExplainedItem { item: item.clone(), explanation, candidates }
        })
        .collect()
}

/// Per-user metric input for the first `k` explained items.
pub fn user_explanations(user: &str, history: &UserHistory, items: &[ExplainedItem], k: usize) -> UserExplanations {
    let top = &items[..k.min(items.len())];
    UserExplanations {
        user: user.to_owned(),
        explanations: top.iter().filter_map(|e| e.explanation.clone()).collect(),
        candidate_attrs: top.iter().flat_map(|e| e.candidates.iter().cloned()).collect(),
        history: history.items.clone(),
        unexplained: top.iter().filter(|e| e.explanation.is_none()).count(),
    }
}

/// A failed stage, kept in the error manifest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StageError {
    pub fold: Option<usize>,
    pub model: Option<ModelKind>,
    pub scorer: Option<ScorerKind>,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerCell {
    pub scorer: ScorerKind,
    pub k: usize,
    pub metrics: PathMetrics,
    pub rows: Vec<UserMetricRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutput {
    pub fold: usize,
    pub model: ModelKind,
    pub ranking: Vec<(usize, RankingMetrics)>,
    pub cells: Vec<ScorerCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: ModelKind,
    pub scorer: ScorerKind,
    pub k: usize,
    /// Mean over folds; `None` when every fold failed.
    pub metrics: Option<PathMetrics>,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub model: ModelKind,
    pub k: usize,
    /// Mean over folds in [`RankingMetrics::NAMES`] order.
    pub values: Option<[f64; 6]>,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceTest {
    pub model: ModelKind,
    pub k: usize,
    pub metric: &'static str,
    pub a: ScorerKind,
    pub b: ScorerKind,
    /// Paired observations (users, or folds for TID and TPD).
    pub pairs: usize,
    pub result: Option<WilcoxonResult>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
    pub ranking: Vec<RankingRow>,
    pub tests: Vec<SignificanceTest>,
    pub errors: Vec<StageError>,
    pub stats: FilterStats,
}

impl ResultsTable {
    pub fn row(&self, model: ModelKind, scorer: ScorerKind, k: usize) -> Option<&PathMetrics> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.scorer == scorer && r.k == k)
            .and_then(|r| r.metrics.as_ref())
    }

    pub fn test(&self, model: ModelKind, k: usize, metric: &str, a: ScorerKind, b: ScorerKind) -> Option<&SignificanceTest> {
        self.tests.iter().find(|t| {
            t.model == model && t.k == k && t.metric == metric && ((t.a, t.b) == (a, b) || (t.a, t.b) == (b, a))
        })
    }
}

fn histories<'a>(g: &KnowledgeGraph, train: &'a Dataset) -> BTreeMap<&'a str, UserHistory> {
    let mut per_user: BTreeMap<&str, Vec<(String, f64)>> = BTreeMap::new();
    for ((u, i), r) in train.recency_index() {
        per_user.entry(u).or_default().push((i.to_owned(), r));
    }
    per_user.into_iter().map(|(u, h)| (u, UserHistory::new(g, h))).collect()
}

fn stage_err(fold: usize, model: ModelKind, scorer: Option<ScorerKind>, stage: &str, e: impl ToString) -> StageError {
    StageError { fold: Some(fold), model: Some(model), scorer, stage: stage.to_owned(), message: e.to_string() }
}

/// Runs one (fold, model) unit. Artifacts go to `out` when given.
pub fn run_fold_model(
    cfg: &RunConfig,
    g: &KnowledgeGraph,
    split: &FoldSplit,
    spec: &ModelSpec,
    catalog_size: usize,
    out: Option<&Path>,
) -> (Option<FoldOutput>, Vec<StageError>) {
    let fold = split.fold_index;
    let model_kind = spec.kind;
    let mut errors = Vec::new();
    let model = match fit(spec, &split.train, Some(g), cfg.seed.wrapping_add(fold as u64)) {
        Ok(m) => m,
        Err(e) => return (None, vec![stage_err(fold, model_kind, None, "fit", e)]),
    };
    let max_k = cfg.max_k();
    let test_users: Vec<&str> = split.test.users().into_iter().collect();
    let lists: Vec<RankedList> = test_users.par_iter().map(|u| model.recommend(u, max_k)).collect();
    if let Some(dir) = out {
        let p = dir.join(format!("recs_{model_kind}_{fold}.csv"));
        if let Err(e) = write_recommendations(fold, &lists, &p) {
            errors.push(stage_err(fold, model_kind, None, "write recommendations", e));
        }
    }

    let mut test: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for it in split.test.interactions() {
        test.entry(it.user.clone()).or_default().insert(it.item.clone());
    }
    let mut ranking = Vec::new();
    for &k in &cfg.ks {
        let recs: BTreeMap<String, Vec<String>> =
            lists.iter().map(|l| (l.user.clone(), l.item_ids().take(k).map(str::to_owned).collect())).collect();
        match ranking_metrics(&recs, &test, catalog_size, k) {
            Ok(m) => ranking.push((k, m)),
            Err(e) => errors.push(stage_err(fold, model_kind, None, "ranking metrics", e)),
        }
    }

    let hist = histories(g, &split.train);
    let empty = UserHistory::new(g, Vec::new());
    let mut cells = Vec::new();
    for &scorer in &cfg.scorers {
        let explained: Vec<(&RankedList, Vec<ExplainedItem>)> = lists
            .par_iter()
            .map(|l| {
                let h = hist.get(l.user.as_str()).unwrap_or(&empty);
                let items: Vec<String> = l.item_ids().map(str::to_owned).collect();
                (l, explain_items(g, h, &items, scorer, cfg.alpha, &cfg.template))
            })
            .collect();
        if let Some(dir) = out {
            let records: Vec<ExplanationRecord> = explained
                .iter()
                .flat_map(|(l, xs)| {
                    xs.iter().filter_map(|x| {
                        x.explanation.clone().map(|explanation| ExplanationRecord { user: l.user.clone(), explanation })
                    })
                })
                .collect();
            let p = dir.join(format!("expl_{model_kind}_{scorer}_{fold}.csv"));
            if let Err(e) = write_explanations(fold, &records, &p) {
                errors.push(stage_err(fold, model_kind, Some(scorer), "write explanations", e));
            }
        }
        for &k in &cfg.ks {
            let mut rows = Vec::new();
            let (mut n_expl, mut n_unexpl) = (0, 0);
            let mut failed = None;
            for (l, xs) in &explained {
                let h = hist.get(l.user.as_str()).unwrap_or(&empty);
                let ue = user_explanations(&l.user, h, xs, k);
                n_expl += ue.explanations.len();
                n_unexpl += ue.unexplained;
                match user_row(g, &ue, k, cfg.beta) {
                    Ok(Some(r)) => rows.push(r),
                    Ok(None) => {}
                    Err(e) => {
                        failed = Some(e);
                        break;
                    }
                }
            }
            match failed {
                Some(e) => errors.push(stage_err(fold, model_kind, Some(scorer), "path metrics", e)),
                None => cells.push(ScorerCell { scorer, k, metrics: aggregate(&rows, n_expl, n_unexpl), rows }),
            }
        }
    }
    (Some(FoldOutput { fold, model: model_kind, ranking, cells }), errors)
}

fn paired(a: &BTreeMap<(usize, &str), f64>, b: &BTreeMap<(usize, &str), f64>) -> (Vec<f64>, Vec<f64>) {
    a.iter().filter_map(|(key, x)| b.get(key).map(|y| (*x, *y))).unzip()
}

/// Scorer-vs-scorer tests within each (model, k). SEP, LIR, ETD and MID
/// pair per-user rows present for both scorers; TID and TPD pair folds.
pub fn significance(cfg: &RunConfig, outputs: &[FoldOutput]) -> Vec<SignificanceTest> {
    type Series<'a> = BTreeMap<(usize, &'a str), f64>;
    let mut tests = Vec::new();
    for spec in &cfg.models {
        for &k in &cfg.ks {
            let series = |scorer: ScorerKind, metric: &str| -> Series<'_> {
                let mut s = BTreeMap::new();
                for o in outputs.iter().filter(|o| o.model == spec.kind) {
                    for c in o.cells.iter().filter(|c| c.scorer == scorer && c.k == k) {
                        match metric {
                            "TID" => {
                                s.insert((o.fold, ""), c.metrics.tid);
                            }
                            "TPD" => {
                                s.insert((o.fold, ""), c.metrics.tpd);
                            }
                            _ => {
                                for r in &c.rows {
                                    let v = match metric {
                                        "MID" => r.mid,
                                        "LIR" => r.lir,
                                        "ETD" => r.etd,
                                        _ => r.sep,
                                    };
                                    s.insert((o.fold, r.user.as_str()), v);
                                }
                            }
                        }
                    }
                }
                s
            };
            for metric in PathMetrics::NAMES {
                for (i, &a) in cfg.scorers.iter().enumerate() {
                    for &b in &cfg.scorers[i + 1..] {
                        let (xa, xb) = paired(&series(a, metric), &series(b, metric));
                        let result = wilcoxon_signed_rank(&xa, &xb).ok();
                        tests.push(SignificanceTest { model: spec.kind, k, metric, a, b, pairs: xa.len(), result });
                    }
                }
            }
        }
    }
    tests
}

/// Fold means of every (model, scorer, k) and (model, k) ranking cell.
pub fn summarize(cfg: &RunConfig, outputs: &[FoldOutput]) -> (Vec<ResultRow>, Vec<RankingRow>) {
    let mut rows = Vec::new();
    let mut ranking = Vec::new();
    for spec in &cfg.models {
        for &k in &cfg.ks {
            for &scorer in &cfg.scorers {
                let parts: Vec<PathMetrics> = outputs
                    .iter()
                    .filter(|o| o.model == spec.kind)
                    .flat_map(|o| o.cells.iter().filter(|c| c.scorer == scorer && c.k == k).map(|c| c.metrics))
                    .collect();
                rows.push(ResultRow {
                    model: spec.kind,
                    scorer,
                    k,
                    metrics: (!parts.is_empty()).then(|| PathMetrics::mean_of(&parts)),
                    folds: parts.len(),
                });
            }
            let parts: Vec<[f64; 6]> = outputs
                .iter()
                .filter(|o| o.model == spec.kind)
                .flat_map(|o| o.ranking.iter().filter(|(kk, _)| *kk == k).map(|(_, m)| m.values()))
                .collect();
            let values = (!parts.is_empty()).then(|| core::array::from_fn(|i| sorted_mean(parts.iter().map(|p| p[i]))));
            ranking.push(RankingRow { model: spec.kind, k, values, folds: parts.len() });
        }
    }
    (rows, ranking)
}

/// Evaluates already loaded inputs. Artifacts are written to `out` when
/// given.
pub fn evaluate(cfg: &RunConfig, prepared: &Prepared, out: Option<&Path>) -> Result<ResultsTable> {
    let g = &prepared.graph;
    if prepared.data.is_empty() {
        return Err(Error::Config("no interaction is covered by the knowledge graph".into()));
    }
    let folds = prepared.data.kfold_split(cfg.folds, cfg.seed)?;
    let mut errors = Vec::new();
    if let Some(dir) = out {
        if let Err(e) = write_fold_manifest(&folds, &dir.join("folds.csv")) {
            errors.push(StageError { fold: None, model: None, scorer: None, stage: "write folds".into(), message: e.to_string() });
        }
    }
    let catalog_size = prepared.data.items().len();
    let units: Vec<(&FoldSplit, &ModelSpec)> =
        folds.iter().flat_map(|f| cfg.models.iter().map(move |m| (f, m))).collect();
    let results: Vec<(Option<FoldOutput>, Vec<StageError>)> = units
        .par_iter()
        .map(|(f, m)| {
            log::info!("fold {} model {}", f.fold_index, m.kind);
            run_fold_model(cfg, g, f, m, catalog_size, out)
        })
        .collect();
    let mut outputs = Vec::new();
    for (o, e) in results {
        outputs.extend(o);
        errors.extend(e);
    }
    let (rows, ranking) = summarize(cfg, &outputs);
    let tests = significance(cfg, &outputs);
    errors.sort();
    Ok(ResultsTable { rows, ranking, tests, errors, stats: prepared.stats })
}

/// The full offline run: load, evaluate, write every artifact.
pub fn run_offline_eval(cfg: &RunConfig) -> Result<ResultsTable> {
    cfg.check_paths()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let prepared = prepare(cfg)?;
    let table = evaluate(cfg, &prepared, Some(&cfg.out))?;
    report::write_all(&table, &cfg.out)?;
    Ok(table)
}
