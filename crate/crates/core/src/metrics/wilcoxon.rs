//! Wilcoxon signed-rank test for paired samples.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest non-zero pair count for which the exact null distribution is used.
pub const EXACT_MAX_N: usize = 25;
/// Minimum number of non-zero differences.
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub exact: bool,
    /// Every difference was zero.
    pub degenerate: bool,
}

/// Average ranks of `|d|` (1-based), ties share the mean rank.
pub fn signed_ranks(diffs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| libm::fabs(diffs[a]).total_cmp(&libm::fabs(diffs[b])));
    let mut ranks = alloc::vec![0.0; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && libm::fabs(diffs[order[j + 1]]) == libm::fabs(diffs[order[i]]) {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided test of `a - b`. Zero differences are dropped first.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() && !a.is_empty() {
        return Ok(WilcoxonResult { statistic: 0.0, p_value: 1.0, n: 0, exact: true, degenerate: true });
    }
    if diffs.len() < MIN_PAIRS {
        return Err(Error::TooFewPairs { needed: MIN_PAIRS, got: diffs.len() });
    }
    let ranks = signed_ranks(&diffs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = diffs.len();
    let (p, exact) = if n <= EXACT_MAX_N {
        (exact_p(&ranks, w_plus), true)
    } else {
        (normal_p(&ranks, w_plus), false)
    };
    Ok(WilcoxonResult { statistic: w_plus, p_value: p, n, exact, degenerate: false })
}

/// Exact two-sided p under the conditional null: each rank carries a
/// positive sign with probability 1/2. Ranks are doubled so that tied
/// (half-integer) ranks stay integral.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| libm::round(2.0 * r) as usize).collect();
    let total: usize = doubled.iter().sum();
    // counts[s] = number of sign patterns whose doubled positive sum is s
    let mut counts = alloc::vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0.0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let w = libm::round(2.0 * w_plus) as usize;
    let patterns = libm::pow(2.0, ranks.len() as f64);
    let lower: f64 = counts[..=w].iter().sum::<f64>() / patterns;
    let upper: f64 = counts[w..].iter().sum::<f64>() / patterns;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Normal approximation with tie correction, no continuity correction.
fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean) / libm::sqrt(var);
    libm::erfc(libm::fabs(z) / core::f64::consts::SQRT_2).min(1.0)
}
