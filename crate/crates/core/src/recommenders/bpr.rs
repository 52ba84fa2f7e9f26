use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{InteractionMatrix, ModelSpec, Recommender};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BprParams {
    pub factors: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub regularization: f64,
    /// Standard deviation of the zero-mean Gaussian initialisation.
    pub init_std: f64,
    /// Uniform negatives drawn per positive.
    pub negatives: usize,
}

impl Default for BprParams {
    fn default() -> Self {
        BprParams {
            factors: 32,
            learning_rate: 0.05,
            epochs: 30,
            regularization: 0.01,
            init_std: 0.1,
            negatives: 1,
        }
    }
}

impl BprParams {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let d = BprParams::default();
        let regularization = match spec.get("regularization") {
            Some(r) if r >= 0.0 => r,
            Some(r) => {
                return Err(crate::Error::InvalidParam {
                    name: "regularization".into(),
                    reason: alloc::format!("must be >= 0, got {r}"),
                })
            }
            None => d.regularization,
        };
        Ok(BprParams {
            factors: spec.count("factors", d.factors)?,
            learning_rate: spec.positive("learning_rate", d.learning_rate)?,
            epochs: spec.count("epochs", d.epochs)?,
            regularization,
            init_std: spec.positive("init_std", d.init_std)?,
            negatives: spec.count("negatives", d.negatives)?,
        })
    }
}

/// Matrix factorisation trained with the pairwise BPR objective by SGD.
#[derive(Debug, Clone)]
pub struct BprMf {
    factors: usize,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    item_bias: Vec<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    std * libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        libm::log1p(libm::exp(x))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

impl BprMf {
    /// Trains the model. Also returns the mean BPR loss
    /// (`softplus(-x_uij)`) observed during each epoch.
    pub fn fit(m: &InteractionMatrix, p: BprParams, seed: u64) -> (Self, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = p.factors;
        let (nu, ni) = (m.n_users(), m.n_items());
        let mut model = BprMf {
            factors: f,
            user_factors: (0..nu * f).map(|_| gaussian(&mut rng, p.init_std)).collect(),
            item_factors: (0..ni * f).map(|_| gaussian(&mut rng, p.init_std)).collect(),
            item_bias: alloc::vec![0.0; ni],
        };
        let mut positives: Vec<(u32, u32)> = Vec::new();
        for u in 0..nu {
            positives.extend(m.user_items(u).iter().map(|&i| (u as u32, i)));
        }
        let mut losses = Vec::with_capacity(p.epochs);
        if positives.is_empty() {
            return (model, losses);
        }
        for _ in 0..p.epochs {
            positives.shuffle(&mut rng);
            let mut total = 0.0;
            let mut count = 0usize;
            for &(u, i) in &positives {
                let owned = m.user_items(u as usize);
                if owned.len() >= ni {
                    continue;
                }
                for _ in 0..p.negatives {
                    let j = loop {
                        let j = rng.gen_range(0..ni as u32);
                        if owned.binary_search(&j).is_err() {
                            break j;
                        }
                    };
                    total += model.step(u as usize, i as usize, j as usize, &p);
                    count += 1;
                }
            }
            losses.push(if count > 0 { total / count as f64 } else { 0.0 });
        }
        (model, losses)
    }

    /// One SGD update on the triple (u, i, j); returns the pre-update loss.
    fn step(&mut self, u: usize, i: usize, j: usize, p: &BprParams) -> f64 {
        let f = self.factors;
        let (lr, reg) = (p.learning_rate, p.regularization);
        let wu = u * f;
        let (hi, hj) = (i * f, j * f);
        let mut x = self.item_bias[i] - self.item_bias[j];
        for k in 0..f {
            x += self.user_factors[wu + k] * (self.item_factors[hi + k] - self.item_factors[hj + k]);
        }
        let loss = softplus(-x);
        let g = sigmoid(-x);
        self.item_bias[i] += lr * (g - reg * self.item_bias[i]);
        self.item_bias[j] += lr * (-g - reg * self.item_bias[j]);
        for k in 0..f {
            let wuk = self.user_factors[wu + k];
            let hik = self.item_factors[hi + k];
            let hjk = self.item_factors[hj + k];
            self.user_factors[wu + k] += lr * (g * (hik - hjk) - reg * wuk);
            self.item_factors[hi + k] += lr * (g * wuk - reg * hik);
            self.item_factors[hj + k] += lr * (-g * wuk - reg * hjk);
        }
        loss
    }

    pub fn score(&self, u: usize, i: usize) -> f64 {
        let f = self.factors;
        let mut s = self.item_bias[i];
        for k in 0..f {
            s += self.user_factors[u * f + k] * self.item_factors[i * f + k];
        }
        s
    }
}

impl Recommender for BprMf {
    fn kind(&self) -> &'static str {
        "bpr_mf"
    }

    fn scores(&self, m: &InteractionMatrix, user: usize) -> Vec<f64> {
        (0..m.n_items()).map(|i| self.score(user, i)).collect()
    }
}
