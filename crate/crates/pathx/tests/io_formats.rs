mod common;

use std::collections::BTreeSet;
use std::path::Path;

use pathx::config::{ItemSource, RunConfig};
use pathx::error::Error;
use pathx::io::interactions::{load_interactions, InteractionSchema};
use pathx::io::triples::{load_graph, read_labels, read_triples, write_labels, write_triples, ItemMarker, LabelFormat, TripleFormat};
use pathx::io::{parse_delimiter, Column};
use pathx_core::dataset::RecencyMode;
use pathx_core::kg::{GraphBuilder, KgConfig, KnowledgeGraph};
use proptest::prelude::*;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn load(p: &Path) -> KnowledgeGraph {
    load_graph(p, &TripleFormat::canonical(), None, KgConfig::default()).unwrap()
}

type Fingerprint = (BTreeSet<(String, String, String)>, BTreeSet<String>, BTreeSet<(String, String)>);

fn fingerprint(g: &KnowledgeGraph) -> Fingerprint {
    (
        g.triples().map(|(h, r, t)| (h.into(), r.into(), t.into())).collect(),
        g.items().iter().map(|&n| g.name(n).to_owned()).collect(),
        g.labels().map(|(i, l)| (i.into(), l.into())).collect(),
    )
}

#[test]
fn duplicate_triple_is_dropped() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "kg.tsv", "1\tgenre\tg1\th\n1\tgenre\tg1\th\n2\tgenre\tg1\th\n");
    let g = load(&p);
    let st = g.stats();
    assert_eq!(st.triples, 2);
    assert_eq!(st.duplicates_dropped, 1);
    assert_eq!(st.items, 2);
}

#[test]
fn empty_triple_file_gives_empty_graph() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "kg.tsv", "");
    let g = load(&p);
    assert_eq!(g.stats().triples, 0);
    assert_eq!(g.stats().items, 0);
}

#[test]
fn malformed_triple_reports_its_line() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "kg.tsv", "1\tgenre\tg1\th\n2\tgenre\n");
    match load_graph(&p, &TripleFormat::canonical(), None, KgConfig::default()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn self_loop_is_a_parse_error() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "kg.tsv", "1\tgenre\t1\th\n");
    assert!(matches!(
        load_graph(&p, &TripleFormat::canonical(), None, KgConfig::default()),
        Err(Error::Parse { line: 1, .. })
    ));
}

#[test]
fn named_columns_need_the_header() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "kg.csv", "subject,predicate,object\n1,genre,g1\n");
    let fmt = TripleFormat {
        delimiter: b',',
        header: true,
        head: Column::name("subject"),
        relation: Column::name("predicate"),
        tail: Column::name("missing"),
        items: ItemMarker::Heads,
    };
    assert!(matches!(
        load_graph(&p, &fmt, None, KgConfig::default()),
        Err(Error::MissingColumn { column, .. }) if column == "missing"
    ));
    let fmt = TripleFormat { tail: Column::name("object"), ..fmt };
    let g = load_graph(&p, &fmt, None, KgConfig::default()).unwrap();
    assert_eq!(g.stats().triples, 1);
    assert_eq!(g.stats().items, 1);
}

#[test]
fn heads_marker_skips_hierarchy_heads() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "kg.tsv", "1\tgenre\tg1\n2\tgenre\tg2\ng2\tsubclass of\tg1\n");
    let fmt = TripleFormat { items: ItemMarker::Heads, ..TripleFormat::canonical() };
    let cfg = KgConfig { hierarchy_edges: vec!["subclass of".into()], ..KgConfig::default() };
    let g = load_graph(&p, &fmt, None, cfg).unwrap();
    let items: BTreeSet<&str> = g.items().iter().map(|&n| g.name(n)).collect();
    assert_eq!(items, BTreeSet::from(["1", "2"]));
}

#[test]
fn listed_items_without_triples_are_ignored() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "kg.tsv", "1\tgenre\tg1\n");
    let fmt = TripleFormat { items: ItemMarker::List(BTreeSet::from(["1".into(), "99".into()])), ..TripleFormat::canonical() };
    let g = load_graph(&p, &fmt, None, KgConfig::default()).unwrap();
    assert_eq!(g.stats().items, 1);
    assert!(g.node("99").is_none());
}

#[test]
fn labels_for_unknown_ids_are_skipped() {
    let d = tempfile::tempdir().unwrap();
    let kg = write(d.path(), "kg.tsv", "1\tgenre\tg1\th\n");
    let labels = write(d.path(), "kg.labels", "g1\tDrama\nzz\tNowhere\n");
    let mut b = GraphBuilder::new();
    read_triples(&mut b, &kg, &TripleFormat::canonical(), &[]).unwrap();
    assert_eq!(read_labels(&mut b, &labels, &LabelFormat::canonical()).unwrap(), 1);
    let g = b.build(KgConfig::default());
    assert_eq!(g.label(g.node("g1").unwrap()), "Drama");
    assert_eq!(g.label(g.node("1").unwrap()), "1");
}

#[test]
fn fixture_graph_round_trips_through_canonical_files() {
    let d = tempfile::tempdir().unwrap();
    let w = common::World::default();
    let kg = write(d.path(), "kg.tsv", &w.triples());
    let lab = write(d.path(), "kg.labels", &w.labels());
    let g = load_graph(&kg, &TripleFormat::canonical(), Some((&lab, &LabelFormat::canonical())), KgConfig::default()).unwrap();
    let (kg2, lab2) = (d.path().join("out.tsv"), d.path().join("out.labels"));
    write_triples(&g, &kg2).unwrap();
    write_labels(&g, &lab2).unwrap();
    let h = load_graph(&kg2, &TripleFormat::canonical(), Some((&lab2, &LabelFormat::canonical())), KgConfig::default()).unwrap();
    assert_eq!(fingerprint(&g), fingerprint(&h));
    write_triples(&h, &d.path().join("again.tsv")).unwrap();
    assert_eq!(common::read(&kg2), common::read(&d.path().join("again.tsv")));
}

#[test]
fn three_movielens_rows_load() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "ratings.csv", "userId,movieId,rating,timestamp\n1,10,4.0,100\n1,20,2.5,200\n2,10,5.0,150\n");
    let data = load_interactions(&p, &InteractionSchema::movielens()).unwrap();
    assert_eq!(data.len(), 3);
    assert_eq!(data.users().len(), 2);
    assert_eq!(data.items().len(), 2);
    let it = &data.interactions()[1];
    assert_eq!((it.user.as_str(), it.item.as_str(), it.rating, it.timestamp), ("1", "20", Some(2.5), Some(200)));
}

#[test]
fn lastfm_rows_use_weight_recency() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "user_artists.dat", "userID\tartistID\tweight\n2\t51\t13883\n2\t52\t11690\n");
    let data = load_interactions(&p, &InteractionSchema::lastfm()).unwrap();
    assert_eq!(data.len(), 2);
    assert_eq!(data.recency_mode(), RecencyMode::Weight);
    assert_eq!(data.interactions()[0].weight, Some(13883.0));
}

#[test]
fn empty_interaction_file_is_empty_dataset() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "ratings.csv", "");
    assert!(load_interactions(&p, &InteractionSchema::movielens()).unwrap().is_empty());
}

#[test]
fn interaction_errors_name_column_or_line() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "a.csv", "user,movieId,rating,timestamp\n1,10,4,1\n");
    assert!(matches!(
        load_interactions(&p, &InteractionSchema::movielens()),
        Err(Error::MissingColumn { column, .. }) if column == "userId"
    ));
    let p = write(d.path(), "b.csv", "userId,movieId,rating,timestamp\n1,10,4,1\n1,11,four,2\n");
    match load_interactions(&p, &InteractionSchema::movielens()) {
        Err(Error::Parse { line, msg, .. }) => {
            assert_eq!(line, 3);
            assert!(msg.contains("four"), "{msg}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn delimiters_parse() {
    assert_eq!(parse_delimiter("tab").unwrap(), b'\t');
    assert_eq!(parse_delimiter("\\t").unwrap(), b'\t');
    assert_eq!(parse_delimiter(";").unwrap(), b';');
    assert!(matches!(parse_delimiter("::"), Err(Error::Config(_))));
}

#[test]
fn config_defaults_and_relative_paths() {
    let base = Path::new("/data/run");
    let cfg = RunConfig::from_toml("[dataset]\npath = \"r.csv\"\n[kg]\npath = \"/abs/kg.tsv\"\n", base).unwrap();
    assert_eq!(cfg.dataset, base.join("r.csv"));
    assert_eq!(cfg.kg.path, Path::new("/abs/kg.tsv"));
    assert_eq!(cfg.folds, 10);
    assert_eq!(cfg.ks, vec![1, 5]);
    assert_eq!(cfg.models.len(), 5);
    assert_eq!(cfg.scorers.len(), 3);
    assert_eq!(cfg.alpha, 0.5);
    assert_eq!(cfg.out, base.join("out"));
    assert_eq!(cfg.kg.items, ItemSource::Marker(ItemMarker::Column(Column::Index(3))));
}

#[test]
fn config_item_sources() {
    let base = Path::new(".");
    let parse = |items: &str| {
        RunConfig::from_toml(&format!("[dataset]\npath = \"r\"\n[kg]\npath = \"k\"\nitems = {items}\n"), base).map(|c| c.kg.items)
    };
    assert_eq!(parse("\"heads\"").unwrap(), ItemSource::Marker(ItemMarker::Heads));
    assert_eq!(parse("\"interactions\"").unwrap(), ItemSource::Interactions);
    assert_eq!(parse("4").unwrap(), ItemSource::Marker(ItemMarker::Column(Column::Index(4))));
    assert_eq!(parse("{ column = \"kind\" }").unwrap(), ItemSource::Marker(ItemMarker::Column(Column::name("kind"))));
    assert!(matches!(parse("\"tails\""), Err(Error::Config(_))));
}

#[test]
fn config_rejects_bad_values() {
    let base = Path::new(".");
    let head = "[dataset]\npath = \"r\"\n[kg]\npath = \"k\"\n";
    for top in [
        "folds = 1",
        "ks = []",
        "ks = [0]",
        "alpha = 1.5",
        "beta = 1.0",
        "scorers = [\"pem\", \"pem\"]",
        "scorers = [\"lime\"]",
        "bogus = 3",
    ] {
        let r = RunConfig::from_toml(&format!("{top}\n{head}"), base);
        assert!(matches!(r, Err(Error::Config(_))), "{top}: {:?}", r.map(|_| ()));
    }
    let dup = format!("[[models]]\nkind = \"ease\"\n[[models]]\nkind = \"ease\"\n{head}");
    assert!(matches!(RunConfig::from_toml(&dup, base), Err(Error::Config(_))));
    let bad_param = format!("[[models]]\nkind = \"ease\"\nparams = {{ factors = 3 }}\n{head}");
    assert!(matches!(RunConfig::from_toml(&bad_param, base), Err(Error::Config(_))));
}

#[test]
fn missing_input_files_are_config_errors() {
    let cfg = RunConfig::from_toml("[dataset]\npath = \"nope.csv\"\n[kg]\npath = \"nope.tsv\"\n", Path::new("/nonexistent")).unwrap();
    assert!(matches!(cfg.check_paths(), Err(Error::Config(m)) if m.contains("nope.csv")));
}

proptest! {
    #[test]
    fn written_triples_reload_to_the_same_graph(rows in proptest::collection::vec((0u8..6, 0u8..3, 0u8..8, any::<bool>()), 0..40)) {
        let mut b = GraphBuilder::new();
        for (h, r, t, item) in &rows {
            let (h, t) = (format!("i{h}"), format!("x{t}"));
            b.add_triple(&h, ["genre", "cast member", "director"][*r as usize], &t).unwrap();
            if *item {
                b.mark_item(&h);
            }
        }
        let g = b.build(KgConfig::default());
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("kg.tsv");
        write_triples(&g, &p).unwrap();
        prop_assert_eq!(fingerprint(&load(&p)), fingerprint(&g));
    }
}
