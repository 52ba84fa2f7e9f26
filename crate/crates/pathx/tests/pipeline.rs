mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::{read, World};
use pathx::config::RunConfig;
use pathx::pipeline::{evaluate, explain_items, prepare, run_offline_eval, UserHistory};
use pathx::report::read_all;
use pathx_core::explain::{ScorerKind, SentenceTemplate};
use pathx_core::recommenders::ModelKind;

fn config(dir: &Path, extra: &str) -> RunConfig {
    let p = World::default().write(dir, extra);
    RunConfig::from_file(&p).unwrap()
}

#[test]
fn single_explanation_has_etd_one() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "folds = 2\nks = [1]\nscorers = [\"explod\"]\n[[models]]\nkind = \"most_pop\"");
    let t = run_offline_eval(&cfg).unwrap();
    assert!(t.errors.is_empty(), "{:?}", t.errors);
    assert_eq!(t.rows.len(), 1);
    let m = t.row(ModelKind::MostPop, ScorerKind::ExpLod, 1).unwrap();
    assert!(m.users > 0);
    assert_eq!(m.etd, 1.0);
    let csv = read(&cfg.out.join("metrics.csv"));
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("most_pop,explod,1,"));
}

#[test]
fn every_model_and_scorer_has_etd_one_at_k1() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "folds = 2\nks = [1]\n[[models]]\nkind = \"most_pop\"\n[[models]]\nkind = \"ease\"");
    let p = prepare(&cfg).unwrap();
    let t = evaluate(&cfg, &p, None).unwrap();
    for r in &t.rows {
        assert_eq!(r.metrics.unwrap().etd, 1.0, "{:?} {:?}", r.model, r.scorer);
    }
}

#[test]
fn coverage_filter_drops_items_outside_the_graph() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "");
    let p = prepare(&cfg).unwrap();
    let w = World::default();
    assert!(p.stats.items_before > w.items);
    assert!(p.stats.items <= w.items);
    assert!(p.stats.ratings < p.stats.ratings_before);
    assert_eq!(p.stats.ratings, p.data.len());
    assert!(p.data.interactions().iter().all(|i| i.rating == Some(1.0)));
    assert!(p.covered.interactions().iter().any(|i| i.rating != Some(1.0)));
}

#[test]
fn folds_partition_the_interactions() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "folds = 3\nks = [1]\nscorers = [\"pem\"]\n[[models]]\nkind = \"most_pop\"");
    run_offline_eval(&cfg).unwrap();
    let p = prepare(&cfg).unwrap();
    let mut test_count: BTreeMap<(String, String), usize> = BTreeMap::new();
    let manifest = read(&cfg.out.join("folds.csv"));
    let mut lines = manifest.lines();
    assert_eq!(lines.next(), Some("user,item,fold,split"));
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        if f[3] == "test" {
            *test_count.entry((f[0].into(), f[1].into())).or_default() += 1;
        }
    }
    assert_eq!(test_count.len(), p.data.len());
    assert!(test_count.values().all(|&c| c == 1));
}

const ALL_MODELS: &str = "folds = 2\nks = [1, 3]\nseed = 11";

fn artifacts(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv" || x == "md") {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), read(&p));
        }
    }
    out
}

#[test]
fn runs_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = config(d.path(), ALL_MODELS);
    cfg.out = d.path().join("a");
    let ta = run_offline_eval(&cfg).unwrap();
    cfg.out = d.path().join("b");
    let tb = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_offline_eval(&cfg).unwrap());
    assert!(ta.errors.is_empty(), "{:?}", ta.errors);
    assert_eq!(ta, tb);
    let (a, b) = (artifacts(&d.path().join("a")), artifacts(&d.path().join("b")));
    for f in ["metrics.csv", "ranking.csv", "significance.csv", "filter.csv", "folds.csv", "report.md"] {
        assert!(a.contains_key(f), "{f} missing");
    }
    assert!(a.keys().any(|f| f.starts_with("recs_bpr_mf_")));
    assert!(a.keys().any(|f| f.starts_with("expl_ease_pem_")));
    assert_eq!(a, b);
    assert_eq!(ta.rows.len(), 5 * 3 * 2);
    assert_eq!(ta.ranking.len(), 5 * 2);
    assert_eq!(ta.tests.len(), 5 * 2 * 6 * 3);
}

#[test]
fn another_seed_changes_the_folds() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = config(d.path(), "folds = 2\nks = [1]\nscorers = [\"pem\"]\n[[models]]\nkind = \"most_pop\"");
    let p = prepare(&cfg).unwrap();
    cfg.out = d.path().join("a");
    std::fs::create_dir_all(&cfg.out).unwrap();
    evaluate(&cfg, &p, Some(&cfg.out)).unwrap();
    cfg.seed = 99;
    cfg.out = d.path().join("b");
    std::fs::create_dir_all(&cfg.out).unwrap();
    evaluate(&cfg, &p, Some(&cfg.out)).unwrap();
    assert_ne!(read(&d.path().join("a/folds.csv")), read(&d.path().join("b/folds.csv")));
}

#[test]
fn results_round_trip_through_the_csv_files() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "folds = 2\nks = [2]\n[[models]]\nkind = \"most_pop\"\n[[models]]\nkind = \"user_knn\"");
    let t = run_offline_eval(&cfg).unwrap();
    assert_eq!(read_all(&cfg.out).unwrap(), t);
}

#[test]
fn a_failed_stage_keeps_the_other_results() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "folds = 2\nks = [1]\nscorers = [\"explod\"]\n[[models]]\nkind = \"most_pop\"\n[[models]]\nkind = \"ease\"");
    std::fs::create_dir_all(cfg.out.join("recs_most_pop_0.csv")).unwrap();
    let t = run_offline_eval(&cfg).unwrap();
    assert_eq!(t.errors.len(), 1);
    let e = &t.errors[0];
    assert_eq!((e.fold, e.model, e.stage.as_str()), (Some(0), Some(ModelKind::MostPop), "write recommendations"));
    assert!(t.row(ModelKind::MostPop, ScorerKind::ExpLod, 1).is_some());
    assert!(t.row(ModelKind::Ease, ScorerKind::ExpLod, 1).is_some());
    assert!(read(&cfg.out.join("errors.csv")).contains("write recommendations"));
    assert!(read(&cfg.out.join("report.md")).contains("## Errors"));
    assert_eq!(read_all(&cfg.out).unwrap(), t);

    std::fs::remove_dir(cfg.out.join("recs_most_pop_0.csv")).unwrap();
    let t = run_offline_eval(&cfg).unwrap();
    assert!(t.errors.is_empty());
    assert!(!cfg.out.join("errors.csv").exists());
}

#[test]
fn missing_data_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "");
    std::fs::remove_file(&cfg.dataset).unwrap();
    assert!(matches!(run_offline_eval(&cfg), Err(pathx::Error::Config(_))));
}

#[test]
fn explanations_use_the_user_history() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "");
    let p = prepare(&cfg).unwrap();
    let g = &p.graph;
    let genre = g.node("g3").unwrap();
    let with: Vec<String> = g.items_with(genre, false).iter().map(|&n| g.name(n).to_owned()).collect();
    assert!(with.len() >= 2, "fixture needs two films of one genre");
    let h = UserHistory::new(g, vec![(with[0].clone(), 1.0), ("not-in-graph".into(), 2.0)]);
    assert_eq!(h.nodes().len(), 1);
    for kind in ScorerKind::ALL {
        let xs = explain_items(g, &h, &[with[1].clone(), "unknown".into()], kind, 0.5, &SentenceTemplate::default());
        assert_eq!(xs.len(), 2);
        let e = xs[0].explanation.as_ref().expect("shared genre explains the film");
        assert!(e.attributes.iter().all(|a| xs[0].candidates.contains(&a.id)));
        assert!(xs[0].candidates.contains("g3"));
        assert!(xs[1].explanation.is_none() && xs[1].candidates.is_empty());
    }
    let none = UserHistory::new(g, Vec::new());
    let xs = explain_items(g, &none, &[with[1].clone()], ScorerKind::Pem, 0.5, &SentenceTemplate::default());
    assert!(xs[0].explanation.is_none());
}
