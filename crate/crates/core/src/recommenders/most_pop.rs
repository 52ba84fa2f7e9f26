use alloc::vec::Vec;

use super::{InteractionMatrix, Recommender};

/// Non-personalised: every item scores its number of distinct users.
#[derive(Debug, Clone)]
pub struct MostPop {
    counts: Vec<f64>,
}

impl MostPop {
    pub fn fit(m: &InteractionMatrix) -> Self {
        MostPop { counts: m.item_popularity() }
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }
}

impl Recommender for MostPop {
    fn kind(&self) -> &'static str {
        "most_pop"
    }

    fn scores(&self, _m: &InteractionMatrix, _user: usize) -> Vec<f64> {
        self.counts.clone()
    }
}
