use alloc::vec::Vec;

use super::{InteractionMatrix, Recommender};

/// User-based nearest neighbours with binary cosine similarity.
///
/// An item's score is the summed similarity of the `k` most similar users
/// that interacted with it.
#[derive(Debug, Clone)]
pub struct UserKnn {
    k: usize,
}

impl UserKnn {
    pub fn fit(_m: &InteractionMatrix, k: usize) -> Self {
        UserKnn { k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// (neighbour, similarity) sorted by similarity desc, then user index.
    pub fn neighbours(&self, m: &InteractionMatrix, user: usize) -> Vec<(usize, f64)> {
        let mut overlap = alloc::vec![0u32; m.n_users()];
        for &i in m.user_items(user) {
            for &v in m.item_users(i as usize) {
                overlap[v as usize] += 1;
            }
        }
        let nu = m.user_items(user).len() as f64;
        let mut sims: Vec<(usize, f64)> = overlap
            .iter()
            .enumerate()
            .filter(|&(v, &c)| v != user && c > 0)
            .map(|(v, &c)| {
                let nv = m.user_items(v).len() as f64;
                (v, c as f64 / libm::sqrt(nu * nv))
            })
            .collect();
        sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        sims.truncate(self.k);
        sims
    }
}

impl Recommender for UserKnn {
    fn kind(&self) -> &'static str {
        "user_knn"
    }

    fn scores(&self, m: &InteractionMatrix, user: usize) -> Vec<f64> {
        let mut scores = alloc::vec![0.0; m.n_items()];
        for (v, sim) in self.neighbours(m, user) {
            for &i in m.user_items(v) {
                scores[i as usize] += sim;
            }
        }
        scores
    }
}
