//! Dense-matrix oracles for the embedding stages.

use nalgebra::DMatrix;

/// Row-wise propagation with an explicit `P = D⁻¹(A + I)` on an undirected
/// graph given as an edge list over row indices.
pub fn propagate_oracle(rows: &DMatrix<f64>, edges: &[(usize, usize)], steps: usize, mix: f64) -> DMatrix<f64> {
    let n = rows.nrows();
    let mut a = DMatrix::<f64>::identity(n, n);
    for &(i, j) in edges {
        if i != j {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
    }
    for i in 0..n {
        let degree: f64 = a.row(i).sum();
        for j in 0..n {
            a[(i, j)] /= degree;
        }
    }
    let mut r = rows.clone();
    for _ in 0..steps {
        r = &r * mix + (&a * &r) * (1.0 - mix);
    }
    normalize_rows(r)
}

pub fn normalize_rows(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..m.nrows() {
        let norm = m.row(i).norm();
        if norm > 1e-300 {
            let scaled = m.row(i) / norm;
            m.set_row(i, &scaled);
        }
    }
    m
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Numerical rank via the singular values of the dense matrix.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * max.max(1e-300)).count()
}

/// Mean pairwise cosine among the rows listed in each block, averaged over
/// all within-block pairs.
pub fn mean_intra_block_cosine(rows: &[Vec<f64>], blocks: &[usize]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            if blocks[i] == blocks[j] {
                total += cosine(&rows[i], &rows[j]);
                pairs += 1;
            }
        }
    }
    total / pairs as f64
}
