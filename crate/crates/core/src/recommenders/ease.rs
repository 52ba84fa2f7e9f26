use alloc::vec::Vec;

use super::{InteractionMatrix, Recommender};
use crate::error::Result;
use crate::linalg::spd_inverse;

/// Linear item-item autoencoder with a zero-diagonal constraint.
///
/// With `G = XᵀX + λI` and `P = G⁻¹`, the weights are
/// `B_ij = -P_ij / P_jj` for `i != j` and `B_ii = 0`.
#[derive(Debug, Clone)]
pub struct Ease {
    n: usize,
    weights: Vec<f64>,
}

impl Ease {
    pub fn fit(m: &InteractionMatrix, lambda: f64) -> Result<Self> {
        let n = m.n_items();
        let mut gram = alloc::vec![0.0; n * n];
        for u in 0..m.n_users() {
            let items = m.user_items(u);
            for (a, &i) in items.iter().enumerate() {
                // lower triangle only; items are ascending
                for &j in &items[..=a] {
                    gram[i as usize * n + j as usize] += 1.0;
                }
            }
        }
        for i in 0..n {
            gram[i * n + i] += lambda;
        }
        let p = spd_inverse(&gram, n)?;
        drop(gram);
        let mut weights = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    weights[i * n + j] = -p[i * n + j] / p[j * n + j];
                }
            }
        }
        Ok(Ease { n, weights })
    }

    /// Row-major item x item weight matrix.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_items(&self) -> usize {
        self.n
    }
}

impl Recommender for Ease {
    fn kind(&self) -> &'static str {
        "ease"
    }

    fn scores(&self, m: &InteractionMatrix, user: usize) -> Vec<f64> {
        let mut s = alloc::vec![0.0; self.n];
        for &i in m.user_items(user) {
            let row = &self.weights[i as usize * self.n..(i as usize + 1) * self.n];
            for (d, w) in s.iter_mut().zip(row) {
                *d += w;
            }
        }
        s
    }
}
