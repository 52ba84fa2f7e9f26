//! Ranking metrics, EASE, PageRank and Wilcoxon against independent
//! dense or exhaustive computations.

use std::collections::{BTreeMap, BTreeSet};

use super::common::rng;
use pathx_core::dataset::{Dataset, Interaction, RecencyMode};
use pathx_core::kg::{GraphBuilder, KgConfig, NodeId};
use pathx_core::metrics::ranking::{ap_at, entropy, exposure, gini, ndcg_at};
use pathx_core::metrics::{ranking_metrics, wilcoxon_signed_rank};
use pathx_core::recommenders::{
    personalized_pagerank, restart_vector, Ease, InteractionMatrix, PageRank, PageRankParams,
};
use rand::seq::SliceRandom;
use rand::Rng;

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = vec![];
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn dcg(list: &[usize], rel: &BTreeSet<usize>, k: usize) -> f64 {
    list.iter()
        .take(k)
        .enumerate()
        .map(|(r, i)| if rel.contains(i) { 1.0 / ((r + 2) as f64).log2() } else { 0.0 })
        .sum()
}

pub fn ndcg_and_map_match_exhaustive_search() {
    let mut r = rng(0x5eed_0005);
    for inst in 0..50 {
        let catalog = r.gen_range(3..=6);
        let k = r.gen_range(1..=catalog);
        let mut recs = BTreeMap::new();
        let mut test = BTreeMap::new();
        let mut nd_sum = 0.0;
        let mut ap_sum = 0.0;
        let mut users = 0;
        for u in 0..5 {
            let mut all: Vec<usize> = (0..catalog).collect();
            all.shuffle(&mut r);
            let list: Vec<usize> = all[..r.gen_range(1..=catalog)].to_vec();
            let rel: BTreeSet<usize> = (0..catalog).filter(|_| r.gen_bool(0.4)).collect();
            let name = |i: &usize| format!("i{i}");
            recs.insert(format!("u{u}"), list.iter().map(name).collect::<Vec<_>>());
            test.insert(format!("u{u}"), rel.iter().map(name).collect::<BTreeSet<_>>());
            if rel.is_empty() {
                continue;
            }
            // ideal DCG by trying every ordering of the catalog
            let idcg = permutations(&(0..catalog).collect::<Vec<_>>())
                .iter()
                .map(|p| dcg(p, &rel, k))
                .fold(0.0, f64::max);
            let nd = dcg(&list, &rel, k) / idcg;
            // AP: precision at every relevant rank, divided by min(k, |rel|)
            let mut ap = 0.0;
            for pos in 0..k.min(list.len()) {
                if rel.contains(&list[pos]) {
                    let hits = list[..=pos].iter().filter(|i| rel.contains(i)).count();
                    ap += hits as f64 / (pos + 1) as f64;
                }
            }
            ap /= k.min(rel.len()) as f64;

            let l: Vec<String> = list.iter().map(name).collect();
            let ls: Vec<&str> = l.iter().map(String::as_str).collect();
            let rs: Vec<String> = rel.iter().map(name).collect();
            let rset: BTreeSet<&str> = rs.iter().map(String::as_str).collect();
            let got_nd = ndcg_at(&ls, &rset, k).unwrap();
            let got_ap = ap_at(&ls, &rset, k).unwrap();
            assert!((got_nd - nd).abs() <= 1e-9, "instance {inst} user {u}: ndcg {got_nd} vs {nd}");
            assert!((got_ap - ap).abs() <= 1e-9, "instance {inst} user {u}: ap {got_ap} vs {ap}");
            nd_sum += nd;
            ap_sum += ap;
            users += 1;
        }
        let m = ranking_metrics(&recs, &test, catalog, k).unwrap();
        assert_eq!(m.evaluated_users, users);
        if users > 0 {
            assert!((m.ndcg - nd_sum / users as f64).abs() <= 1e-9);
            assert!((m.map - ap_sum / users as f64).abs() <= 1e-9);
        }
    }
}

pub fn uniform_exposure_has_max_entropy_and_zero_gini() {
    for m in 1..=8usize {
        let names: Vec<String> = (0..m).map(|i| format!("i{i}")).collect();
        let lists: Vec<Vec<&str>> = names.iter().map(|n| vec![n.as_str()]).collect();
        let c = exposure(lists.iter().map(Vec::as_slice), 1);
        assert!((entropy(&c) - (m as f64).ln()).abs() < 1e-12);
        assert_eq!(gini(&c, m).unwrap(), 0.0);
    }
    // all exposure on one item out of m: Gini = (m-1)/m
    let one = [("x", 7usize)].into_iter().collect();
    assert!((gini(&one, 5).unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(entropy(&one), 0.0);
}

fn interactions(rows: &[(&str, &str)]) -> Dataset {
    Dataset::new(
        rows.iter().enumerate().map(|(t, (u, i))| Interaction::new(*u, *i).with_timestamp(t as i64)).collect(),
        RecencyMode::Timestamp,
    )
    .unwrap()
}

/// Solves `a x = b` by Gauss-Jordan elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

pub fn ease_matches_per_column_ridge_regression() {
    // Each column of B solves min ||X_j - X_{-j} b||² + λ||b||².
    let d = interactions(&[
        ("u1", "a"),
        ("u1", "b"),
        ("u2", "b"),
        ("u2", "c"),
        ("u3", "a"),
        ("u3", "c"),
        ("u4", "a"),
        ("u4", "b"),
        ("u4", "c"),
        ("u5", "c"),
    ]);
    let m = InteractionMatrix::from_dataset(&d);
    let lambda = 0.7;
    let ease = Ease::fit(&m, lambda).unwrap();
    let n = m.n_items();
    assert_eq!(n, 3);
    let x: Vec<Vec<f64>> = (0..m.n_users())
        .map(|u| (0..n).map(|i| if m.user_items(u).contains(&(i as u32)) { 1.0 } else { 0.0 }).collect())
        .collect();
    for j in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        let a: Vec<Vec<f64>> = others
            .iter()
            .map(|&p| {
                others
                    .iter()
                    .map(|&q| x.iter().map(|row| row[p] * row[q]).sum::<f64>() + if p == q { lambda } else { 0.0 })
                    .collect()
            })
            .collect();
        let b: Vec<f64> = others.iter().map(|&p| x.iter().map(|row| row[p] * row[j]).sum()).collect();
        let col = solve(a, b);
        assert_eq!(ease.weights()[j * n + j], 0.0, "diagonal must be exactly zero");
        for (t, &i) in others.iter().enumerate() {
            let got = ease.weights()[i * n + j];
            assert!((got - col[t]).abs() < 1e-8, "B[{i}][{j}] = {got}, oracle {}", col[t]);
        }
    }
}

pub fn pagerank_matches_dense_linear_solve() {
    // π = dWπ + (1 - d + d·Σ_dangling π) r  is linear in π:
    // (I - dW - d·r·1_danglingᵀ) π = (1 - d) r
    let mut b = GraphBuilder::new();
    for (h, r, t) in [
        ("m1", "genre", "drama"),
        ("m2", "genre", "drama"),
        ("m2", "director", "x"),
        ("m3", "director", "x"),
        ("m3", "genre", "comedy"),
        ("m4", "genre", "comedy"),
        ("drama", "subclass of", "fiction"),
    ] {
        b.add_triple(h, r, t).unwrap();
    }
    for i in ["m1", "m2", "m3", "m4", "m5"] {
        b.mark_item(i);
    }
    let g = b.build(KgConfig::default());
    let n = g.node_count();
    let d = interactions(&[("u", "m1"), ("u", "m3"), ("v", "m2"), ("v", "m5"), ("w", "m4")]);
    let m = InteractionMatrix::from_dataset(&d);
    let params = PageRankParams { tol: 1e-15, max_iter: 10_000, ..PageRankParams::default() };
    let pr = PageRank::fit(&m, &g, params);

    for user in ["u", "v"] {
        let uidx = m.user(user).unwrap();
        let profile: Vec<usize> = m.user_items(uidx).iter().map(|&i| g.node(m.item_id(i as usize)).unwrap().idx()).collect();
        // restart built by hand: 0.8 on profile, 0.2 uniform everywhere
        let mut r = vec![0.2 / n as f64; n];
        for &p in &profile {
            r[p] += 0.8 / profile.len() as f64;
        }
        let damp = 0.85;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = 1.0;
        }
        for j in 0..n {
            let nb = g.neighbours(NodeId(j as u32));
            if nb.is_empty() {
                for i in 0..n {
                    a[i][j] -= damp * r[i];
                }
            } else {
                for &v in nb {
                    a[v.idx()][j] -= damp / nb.len() as f64;
                }
            }
        }
        let rhs: Vec<f64> = r.iter().map(|x| (1.0 - damp) * x).collect();
        let want = solve(a, rhs);
        let got = pr.node_scores(&m, uidx);
        assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for i in 0..n {
            assert!((got[i] - want[i]).abs() < 1e-8, "{user} node {i}: {} vs {}", got[i], want[i]);
        }
    }
}

pub fn pagerank_matches_dense_power_iteration_on_random_graphs() {
    let mut rg = rng(0x5eed_0006);
    for _ in 0..30 {
        let n = rg.gen_range(2..=9);
        let mut adj = vec![BTreeSet::new(); n];
        for _ in 0..rg.gen_range(0..=2 * n) {
            let (a, b) = (rg.gen_range(0..n), rg.gen_range(0..n));
            if a != b {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        let lists: Vec<Vec<NodeId>> = adj.iter().map(|s| s.iter().map(|&v| NodeId(v as u32)).collect()).collect();
        let refs: Vec<&[NodeId]> = lists.iter().map(Vec::as_slice).collect();
        let profile = vec![rg.gen_range(0..n)];
        let restart = restart_vector(n, &profile, 0.8);
        let got = personalized_pagerank(&refs, &restart, 0.85, 10_000, 1e-15);
        // dense matrix form
        let mut mtx = vec![vec![0.0; n]; n];
        for j in 0..n {
            for i in 0..n {
                mtx[i][j] = if adj[j].is_empty() { restart[i] } else if adj[j].contains(&i) { 1.0 / adj[j].len() as f64 } else { 0.0 };
            }
        }
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..5000 {
            pi = (0..n)
                .map(|i| 0.85 * (0..n).map(|j| mtx[i][j] * pi[j]).sum::<f64>() + 0.15 * restart[i])
                .collect();
        }
        for i in 0..n {
            assert!((got[i] - pi[i]).abs() < 1e-8);
        }
    }
}

/// Exact two-sided p by listing every sign pattern.
fn enumerate_p(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|x| *x != 0.0).collect();
    let n = d.len();
    let rank = |x: f64| {
        let less = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
        let eq = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
        less + (eq + 1.0) / 2.0
    };
    let ranks: Vec<f64> = d.iter().map(|&x| rank(x)).collect();
    let observed: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let (mut lo, mut hi) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| ranks[b]).sum();
        if w <= observed {
            lo += 1;
        }
        if w >= observed {
            hi += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * (lo.min(hi) as f64 / total)).min(1.0)
}

pub fn wilcoxon_exact_equals_sign_enumeration() {
    let mut r = rng(0x5eed_0007);
    for n in 5..=12 {
        for _ in 0..40 {
            let a: Vec<f64> = (0..n).map(|_| r.gen_range(-4..=4) as f64 * 0.5).collect();
            let b: Vec<f64> = (0..n).map(|_| r.gen_range(-4..=4) as f64 * 0.5).collect();
            let nonzero = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            if nonzero < 5 {
                continue;
            }
            let got = wilcoxon_signed_rank(&a, &b).unwrap();
            let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            assert_eq!(got.p_value, enumerate_p(&diffs), "a={a:?} b={b:?}");
        }
    }
}
