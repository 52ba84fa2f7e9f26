#![allow(dead_code)]

use std::collections::BTreeSet;

use pathx_core::kg::{GraphBuilder, KgConfig, KnowledgeGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RELS: [&str; 3] = ["genre", "cast member", "director"];
pub const HIER: &str = "subclass of";

/// Relative comparison with a tiny absolute floor for values near zero.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

/// A small random graph kept as plain triples.
#[derive(Debug, Clone)]
pub struct Instance {
    pub items: Vec<String>,
    pub attrs: Vec<String>,
    pub triples: BTreeSet<(String, String, String)>,
    pub profile: Vec<String>,
    pub recommended: Vec<String>,
    pub alpha: f64,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng) -> Instance {
        let n_items = rng.gen_range(2..=10);
        let n_attrs = rng.gen_range(1..=8);
        let items: Vec<String> = (0..n_items).map(|i| format!("i{i}")).collect();
        let attrs: Vec<String> = (0..n_attrs).map(|a| format!("a{a}")).collect();
        let mut triples = BTreeSet::new();
        for it in &items {
            for _ in 0..rng.gen_range(0..=4) {
                let a = &attrs[rng.gen_range(0..n_attrs)];
                let r = RELS[rng.gen_range(0..RELS.len())];
                triples.insert((it.clone(), r.to_string(), a.clone()));
            }
        }
        if n_attrs >= 2 {
            for _ in 0..rng.gen_range(0..=3) {
                let c = rng.gen_range(0..n_attrs);
                let p = rng.gen_range(0..n_attrs);
                if c != p {
                    triples.insert((attrs[c].clone(), HIER.to_string(), attrs[p].clone()));
                }
            }
        }
        let mut order: Vec<usize> = (0..n_items).collect();
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let n_profile = rng.gen_range(1..n_items);
        let n_rec = rng.gen_range(1..=(n_items - n_profile));
        let profile = order[..n_profile].iter().map(|&i| items[i].clone()).collect();
        let recommended = order[n_profile..n_profile + n_rec].iter().map(|&i| items[i].clone()).collect();
        let alpha = [0.5, 0.0, 1.0, 0.3][rng.gen_range(0..4)];
        Instance { items, attrs, triples, profile, recommended, alpha }
    }

    pub fn graph(&self) -> KnowledgeGraph {
        let mut b = GraphBuilder::new();
        for (h, r, t) in &self.triples {
            b.add_triple(h, r, t).unwrap();
        }
        for i in &self.items {
            b.mark_item(i);
        }
        b.build(KgConfig::default())
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
