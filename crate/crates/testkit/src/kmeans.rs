//! Explicit-vector k-means oracles.

use ideareader_core::{EmbeddingMatrix, KernelKind, KernelMatrix, Stage};
use rand::Rng;

pub type Points = Vec<Vec<f64>>;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn centroids(points: &Points, labels: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| (c > 0).then(|| s.into_iter().map(|x| x / c as f64).collect()))
        .collect()
}

/// Sum of squared distances to the cluster means.
pub fn sse(points: &Points, labels: &[usize], k: usize) -> f64 {
    let cs = centroids(points, labels, k);
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, cs[l].as_ref().expect("non-empty cluster")))
        .sum()
}

/// Plain Lloyd iterations starting from the given seed points.
///
/// Initial labels: nearest seed, ties to the lower index. Later steps keep a
/// point's cluster unless another centroid is strictly closer. An empty
/// cluster takes the point farthest from its own centroid among clusters of
/// two or more. Stops when labels stop changing.
pub fn lloyd_from_seeds(points: &Points, seeds: &[usize], max_iter: usize) -> Vec<usize> {
    let k = seeds.len();
    let mut labels: Vec<usize> = points
        .iter()
        .map(|p| {
            let mut best = 0;
            for c in 1..k {
                if sq_dist(p, &points[seeds[c]]) < sq_dist(p, &points[seeds[best]]) {
                    best = c;
                }
            }
            best
        })
        .collect();
    fill_empty(points, &mut labels, k);
    for _ in 0..max_iter {
        let cs = centroids(points, &labels, k);
        let mut next = labels.clone();
        for (i, p) in points.iter().enumerate() {
            for (c, centroid) in cs.iter().enumerate() {
                let centroid = centroid.as_ref().expect("non-empty cluster");
                let current = cs[next[i]].as_ref().expect("non-empty cluster");
                if sq_dist(p, centroid) < sq_dist(p, current) {
                    next[i] = c;
                }
            }
        }
        fill_empty(points, &mut next, k);
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

fn fill_empty(points: &Points, labels: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let cs = centroids(points, labels, k);
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let l = labels[i];
            if counts[l] < 2 {
                continue;
            }
            let d = sq_dist(p, cs[l].as_ref().expect("non-empty"));
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        labels[far.expect("splittable cluster").0] = empty;
    }
}

/// The 2-partition with minimum SSE among all `2^(n-1) - 1` splits into two
/// non-empty parts.
pub fn best_bipartition(points: &Points) -> Vec<usize> {
    let n = points.len();
    assert!((2..=20).contains(&n));
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 1u32..(1 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        let cost = sse(points, &labels, 2);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, labels));
        }
    }
    best.expect("n ≥ 2").1
}

/// `per_cloud` points around each of `centers`, with uniform jitter of
/// half-width `spread`. Returns points and planted labels.
pub fn planted_clouds(rng: &mut impl Rng, centers: &Points, per_cloud: usize, spread: f64) -> (Points, Vec<usize>) {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_cloud {
            points.push(center.iter().map(|x| x + rng.random_range(-spread..spread)).collect());
            labels.push(c);
        }
    }
    (points, labels)
}

pub fn random_points(rng: &mut impl Rng, n: usize, dim: usize) -> Points {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// Linear kernel of the raw (unnormalized) points.
pub fn linear_kernel(points: &Points) -> KernelMatrix<f64> {
    let n = points.len();
    let mut values = Vec::with_capacity(n * n);
    for a in points {
        for b in points {
            values.push(a.iter().zip(b).map(|(x, y)| x * y).sum());
        }
    }
    KernelMatrix::from_values(ids(n), values, KernelKind::Linear)
}

/// Points as unit rows of an embedding matrix.
pub fn unit_embedding(points: &Points) -> EmbeddingMatrix<f64> {
    let dim = points[0].len();
    EmbeddingMatrix::from_rows(ids(points.len()), dim, points.concat(), Stage::Fused)
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i:03}")).collect()
}
