//! The six path metrics against literal re-computation on random
//! explanation lists.

use std::collections::{BTreeMap, BTreeSet};

use super::common::{close, rng, Instance};
use pathx_core::explain::{Explanation, ShownAttribute};
use pathx_core::metrics::{aggregate, build_ewma_profile, user_row, UserExplanations, DEFAULT_BETA};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const INSTANCES: u64 = 1000;
const REL_TOL: f64 = 1e-9;

/// Literal EWMA: sort, min-max, then `s_i = (1-β)s_{i-1} + β v_i`.
fn oracle_ewma(values: &[(String, f64)], beta: f64) -> BTreeMap<String, f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let lo = v.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let hi = v.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let mut out = BTreeMap::new();
    let mut s = 0.0;
    for (i, (k, raw)) in v.iter().enumerate() {
        let x = if hi == lo { 0.5 } else { (raw - lo) / (hi - lo) };
        s = if i == 0 { x } else { (1.0 - beta) * s + beta * x };
        out.insert(k.clone(), s);
    }
    out
}

fn avg(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

struct User {
    id: String,
    history: Vec<(String, f64)>,
    omega: BTreeSet<String>,
    expl: Vec<Explanation>,
}

fn random_users(rng: &mut ChaCha8Rng, inst: &Instance, k: usize) -> Vec<User> {
    let attrs_in_graph: Vec<String> = {
        let mut s = BTreeSet::new();
        for (_, _, t) in &inst.triples {
            if inst.attrs.contains(t) {
                s.insert(t.clone());
            }
        }
        s.into_iter().collect()
    };
    if attrs_in_graph.is_empty() {
        return Vec::new();
    }
    let n_users = rng.gen_range(1..=4);
    (0..n_users)
        .map(|u| {
            let n_hist = rng.gen_range(1..=inst.items.len());
            let history: Vec<(String, f64)> = inst.items[..n_hist]
                .iter()
                .map(|i| (i.clone(), rng.gen_range(0..5) as f64))
                .collect();
            let omega: BTreeSet<String> = attrs_in_graph
                .iter()
                .filter(|_| rng.gen_bool(0.6))
                .cloned()
                .chain(std::iter::once(attrs_in_graph[0].clone()))
                .collect();
            let omega_v: Vec<&String> = omega.iter().collect();
            let expl = (0..rng.gen_range(1..=k))
                .map(|_| {
                    let attributes = (0..rng.gen_range(1..=3))
                        .map(|_| ShownAttribute {
                            id: omega_v[rng.gen_range(0..omega_v.len())].clone(),
                            edge: "genre".into(),
                            score: 1.0,
                        })
                        .collect();
                    let linked_items = (0..rng.gen_range(0..=3))
                        .map(|_| history[rng.gen_range(0..history.len())].0.clone())
                        .collect();
                    Explanation { recommended: "r".into(), attributes, linked_items, sentence: String::new() }
                })
                .collect();
            User { id: format!("u{u}"), history, omega, expl }
        })
        .collect()
}

pub fn six_metrics_match_literal_computation() {
    let mut r = rng(0x5eed_0003);
    let mut checked = 0;
    for n in 0..INSTANCES {
        let inst = Instance::random(&mut r);
        let g = inst.graph();
        let k = [1, 3, 5][r.gen_range(0..3)];
        let users = random_users(&mut r, &inst, k);
        if users.is_empty() {
            continue;
        }
        let mut rows = Vec::new();
        let mut all_items = BTreeSet::new();
        let mut all_attrs = BTreeSet::new();
        let (mut sep_sum, mut lir_sum, mut etd_sum, mut mid_sum) = (0.0, 0.0, 0.0, 0.0);
        for u in &users {
            // popularity = number of raw triples with the attribute as tail
            let pop: Vec<(String, f64)> = u
                .omega
                .iter()
                .map(|a| (a.clone(), inst.triples.iter().filter(|(_, _, t)| t == a).count() as f64))
                .collect();
            let pe = oracle_ewma(&pop, DEFAULT_BETA);
            let he = oracle_ewma(&u.history, DEFAULT_BETA);
            let mut sep_parts = vec![];
            let mut lir_parts = vec![];
            let mut primaries = BTreeSet::new();
            let mut items = BTreeSet::new();
            for e in &u.expl {
                let a: Vec<f64> = e.attributes.iter().map(|x| pe[&x.id]).collect();
                sep_parts.extend(avg(&a));
                let l: Vec<f64> = e.linked_items.iter().map(|x| he[x]).collect();
                lir_parts.extend(avg(&l));
                primaries.insert(e.attributes[0].id.clone());
                for x in &e.linked_items {
                    items.insert(x.clone());
                    all_items.insert(x.clone());
                }
                for x in &e.attributes {
                    all_attrs.insert(x.id.clone());
                }
            }
            let sep = avg(&sep_parts).unwrap_or(0.0);
            let lir = avg(&lir_parts).unwrap_or(0.0);
            let etd = primaries.len() as f64 / k.min(u.omega.len()) as f64;
            let mid = items.len() as f64;

            let ue = UserExplanations {
                user: u.id.clone(),
                explanations: u.expl.clone(),
                candidate_attrs: u.omega.clone(),
                history: u.history.clone(),
                unexplained: 0,
            };
            let row = user_row(&g, &ue, k, DEFAULT_BETA).unwrap().unwrap();
            assert!(close(row.sep, sep, REL_TOL), "instance {n} SEP {} vs {sep}", row.sep);
            assert!(close(row.lir, lir, REL_TOL), "instance {n} LIR {} vs {lir}", row.lir);
            assert!(close(row.etd, etd, REL_TOL), "instance {n} ETD {} vs {etd}", row.etd);
            assert_eq!(row.mid, mid, "instance {n} MID");
            sep_sum += sep;
            lir_sum += lir;
            etd_sum += etd;
            mid_sum += mid;
            rows.push(row);
        }
        let m = users.len() as f64;
        let agg = aggregate(&rows, 0, 0);
        assert!(close(agg.sep, sep_sum / m, REL_TOL));
        assert!(close(agg.lir, lir_sum / m, REL_TOL));
        assert!(close(agg.etd, etd_sum / m, REL_TOL));
        assert!(close(agg.mid, mid_sum / m, REL_TOL));
        assert_eq!(agg.tid, all_items.len() as f64, "instance {n} TID");
        assert_eq!(agg.tpd, all_attrs.len() as f64, "instance {n} TPD");
        checked += 1;
    }
    assert!(checked > 900, "too few usable instances: {checked}");
}

pub fn ewma_profile_matches_literal_recursion() {
    let mut r = rng(0x5eed_0004);
    for _ in 0..INSTANCES {
        let n = r.gen_range(1..=12);
        let vals: Vec<(String, f64)> = (0..n).map(|i| (format!("e{i}"), r.gen_range(0..6) as f64 * 1.5)).collect();
        let beta = [0.3, 0.1, 0.9][r.gen_range(0..3)];
        let got = build_ewma_profile(&vals, beta).unwrap();
        let want = oracle_ewma(&vals, beta);
        for (k, v) in &want {
            assert!(close(got.value(k).unwrap(), *v, REL_TOL));
        }
    }
}
