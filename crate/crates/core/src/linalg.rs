//! Dense symmetric positive-definite inversion, row-major.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Inverts the SPD matrix `a` (n x n, row-major) through a Cholesky
/// factorisation `A = L Lᵀ`, `A⁻¹ = L⁻ᵀ L⁻¹`. Only the lower triangle of `a`
/// is read. All inner loops run over contiguous rows.
pub fn spd_inverse(a: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut l = alloc::vec![0.0; n * n];
    for j in 0..n {
        let (done, rest) = l.split_at_mut(j * n);
        let row_j = &mut rest[..n];
        // off-diagonal entries of row j
        for k in 0..j {
            let row_k = &done[k * n..k * n + k];
            let dot: f64 = row_k.iter().zip(&row_j[..k]).map(|(x, y)| x * y).sum();
            row_j[k] = (a[j * n + k] - dot) / done[k * n + k];
        }
        let sq: f64 = row_j[..j].iter().map(|x| x * x).sum();
        let d = a[j * n + j] - sq;
        if d.is_nan() || d <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        row_j[j] = libm::sqrt(d);
    }

    // W = L⁻¹, built row by row: W_i = (e_i - Σ_{k<i} L_ik W_k) / L_ii
    let mut w = alloc::vec![0.0; n * n];
    for i in 0..n {
        let (done, rest) = w.split_at_mut(i * n);
        let row_i = &mut rest[..n];
        row_i[i] = 1.0;
        for k in 0..i {
            let lik = l[i * n + k];
            if lik == 0.0 {
                continue;
            }
            let row_k = &done[k * n..k * n + k + 1];
            for (dst, src) in row_i[..=k].iter_mut().zip(row_k) {
                *dst -= lik * src;
            }
        }
        let inv = 1.0 / l[i * n + i];
        for v in &mut row_i[..=i] {
            *v *= inv;
        }
    }
    drop(l);

    // P = Wᵀ W, accumulated as a sum of outer products of W's rows.
    let mut p = alloc::vec![0.0; n * n];
    for k in 0..n {
        let row_k = &w[k * n..k * n + k + 1];
        for (a_idx, &wa) in row_k.iter().enumerate() {
            if wa == 0.0 {
                continue;
            }
            let dst = &mut p[a_idx * n..a_idx * n + k + 1];
            for (d, &wb) in dst.iter_mut().zip(row_k) {
                *d += wa * wb;
            }
        }
    }
    Ok(p)
}
