use nalgebra::{DMatrix, SymmetricEigen};

use crate::scalar::Scalar;

use super::{EmbeddingError, EmbeddingMatrix, SparseVector, Stage};

/// Eigenvalues of the Gram matrix below this fraction of the largest one
/// count as numerically zero when deciding the rank.
const RANK_TOLERANCE: f64 = 1e-10;

/// Rank-`d` truncated SVD of the sparse row matrix `A`, returned as the row
/// coordinates `U_d Σ_d` (equal to `A V_d`) and re-normalized.
///
/// The decomposition goes through the `n × n` Gram matrix `A Aᵀ = U Σ² Uᵀ`,
/// which is small because rows are papers. When the numerical rank `r` is
/// below `d` the output has `r` columns. Each column's sign is fixed so that
/// its largest-magnitude entry is positive.
pub fn reduce_dense<T: Scalar>(
    ids: &[String],
    rows: &[SparseVector<T>],
    d: usize,
) -> Result<EmbeddingMatrix<T>, EmbeddingError> {
    assert_eq!(ids.len(), rows.len(), "one row per id");
    let n = rows.len();
    if n < 2 {
        return Err(EmbeddingError::TooFewRows(n));
    }
    if rows.iter().all(SparseVector::is_zero) {
        return Err(EmbeddingError::AllZeroMatrix);
    }

    let gram = DMatrix::<f64>::from_fn(n, n, |i, j| rows[i].dot(&rows[j]).as_f64());
    let eigen = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let largest = eigen.eigenvalues[order[0]];
    let rank = order
        .iter()
        .take_while(|&&k| eigen.eigenvalues[k] > largest * RANK_TOLERANCE)
        .count();
    let dim = d.min(rank).max(1);

    let mut columns: Vec<Vec<f64>> = order[..dim]
        .iter()
        .map(|&k| {
            let scale = eigen.eigenvalues[k].max(0.0).sqrt();
            eigen.eigenvectors.column(k).iter().map(|u| u * scale).collect()
        })
        .collect();
    for col in &mut columns {
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &v)| if v.abs() > best.1.abs() { (i, v) } else { best });
        if pivot.1 < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }

    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        if rows[i].is_zero() {
            data.extend(std::iter::repeat_n(T::zero(), dim));
        } else {
            data.extend(columns.iter().map(|col| T::lit(col[i])));
        }
    }
    Ok(EmbeddingMatrix::from_rows(ids.to_vec(), dim, data, Stage::TfidfDense))
}
