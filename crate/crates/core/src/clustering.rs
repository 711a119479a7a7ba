//! Kernel k-means topic clustering.
//!
//! All distances are computed from kernel entries only:
//! `d²(i, C) = K_ii − (2/|C|) Σ_{j∈C} K_ij + (1/|C|²) Σ_{j,l∈C} K_jl`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingMatrix;
use crate::scalar::{dot, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClusterError {
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("k = {k} exceeds the {n} points")]
    TooManyClusters { k: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Gaussian { gamma: f64 },
}

impl Default for KernelKind {
    fn default() -> Self {
        KernelKind::Linear
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<T> {
    ids: Vec<String>,
    values: Vec<T>,
    kind: KernelKind,
}

impl<T: Scalar> KernelMatrix<T> {
    /// Linear kernel: `K_ij = ⟨r_i, r_j⟩`. Gaussian: `exp(−γ‖r_i − r_j‖²)`.
    pub fn compute(emb: &EmbeddingMatrix<T>, kind: KernelKind) -> Self {
        let n = emb.len();
        let mut values = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = match kind {
                    KernelKind::Linear => dot(emb.row(i), emb.row(j)),
                    KernelKind::Gaussian { gamma } => {
                        let d2: T = emb
                            .row(i)
                            .iter()
                            .zip(emb.row(j))
                            .map(|(&a, &b)| (a - b) * (a - b))
                            .sum();
                        (-T::lit(gamma) * d2).exp()
                    }
                };
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self {
            ids: emb.ids().to_vec(),
            values,
            kind,
        }
    }

    /// Wraps a precomputed symmetric matrix given in row-major order.
    pub fn from_values(ids: Vec<String>, values: Vec<T>, kind: KernelKind) -> Self {
        assert_eq!(values.len(), ids.len() * ids.len(), "kernel must be n × n");
        Self { ids, values, kind }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.ids.len() + j]
    }

    /// Squared feature-space distance between points `i` and `j`.
    pub fn distance2(&self, i: usize, j: usize) -> T {
        (self.get(i, i) + self.get(j, j) - T::lit(2.0) * self.get(i, j)).max(T::zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment<T> {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub k: usize,
    /// Final within-cluster kernel distortion.
    pub objective: T,
    pub iterations: usize,
    /// Objective after initialization and after every iteration.
    pub history: Vec<T>,
}

impl<T> ClusterAssignment<T> {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = &str> {
        self.labels
            .iter()
            .zip(&self.ids)
            .filter(move |(&l, _)| l == cluster)
            .map(|(_, id)| id.as_str())
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// k-means++ seeding on kernel distances, driven by a ChaCha8 stream seeded
/// with `seed`. Returns the indices of the `k` seed points.
///
/// When every remaining point coincides with a chosen seed the smallest
/// unchosen index is taken.
pub fn kmeans_plus_plus_seeds<T: Scalar>(
    kernel: &KernelMatrix<T>,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, ClusterError> {
    let n = kernel.len();
    check_k(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut chosen = vec![false; n];
    chosen[first] = true;
    let mut seeds = vec![first];
    let mut nearest: Vec<T> = (0..n).map(|i| kernel.distance2(i, first)).collect();
    while seeds.len() < k {
        let total: T = (0..n).filter(|&i| !chosen[i]).map(|i| nearest[i]).sum();
        let draw = T::lit(rng.random::<f64>()) * total;
        let mut pick = None;
        if total > T::zero() {
            let mut acc = T::zero();
            for i in (0..n).filter(|&i| !chosen[i] && nearest[i] > T::zero()) {
                acc = acc + nearest[i];
                pick = Some(i);
                if acc > draw {
                    break;
                }
            }
        }
        let next = pick.unwrap_or_else(|| (0..n).find(|&i| !chosen[i]).expect("k ≤ n"));
        chosen[next] = true;
        seeds.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(kernel.distance2(i, next));
        }
    }
    Ok(seeds)
}

/// Kernel k-means from k-means++ seeds.
///
/// Points start in the cluster of their nearest seed; then assignment and
/// implicit centroid updates alternate until no label changes, the
/// objective moves by less than `tol`, or `max_iter` rounds pass. A point
/// keeps its cluster on distance ties. An empty cluster receives the point
/// farthest from its own centroid among clusters with at least two members.
pub fn kernel_kmeans<T: Scalar>(
    kernel: &KernelMatrix<T>,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: T,
) -> Result<ClusterAssignment<T>, ClusterError> {
    let seeds = kmeans_plus_plus_seeds(kernel, k, seed)?;
    Ok(kernel_kmeans_from_seeds(kernel, &seeds, max_iter, tol))
}

/// Kernel k-means starting from explicit seed points.
pub fn kernel_kmeans_from_seeds<T: Scalar>(
    kernel: &KernelMatrix<T>,
    seeds: &[usize],
    max_iter: usize,
    tol: T,
) -> ClusterAssignment<T> {
    let n = kernel.len();
    let k = seeds.len();
    let mut labels: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = 0;
            for c in 1..k {
                if kernel.distance2(i, seeds[c]) < kernel.distance2(i, seeds[best]) {
                    best = c;
                }
            }
            best
        })
        .collect();
    repair_empty(kernel, &mut labels, k);
    let mut objective = objective(kernel, &labels, k);
    let mut history = vec![objective];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let d2 = distances(kernel, &labels, k);
        let mut next: Vec<usize> = (0..n)
            .map(|i| {
                let row = &d2[i * k..(i + 1) * k];
                let mut best = labels[i];
                for (c, &d) in row.iter().enumerate() {
                    if d < row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect();
        repair_empty(kernel, &mut next, k);
        let next_objective = self::objective(kernel, &next, k);
        debug_assert!(
            next_objective <= objective + T::lit(1e-9) * (T::one() + objective.abs()),
            "kernel k-means objective increased"
        );
        let changed = next != labels;
        labels = next;
        history.push(next_objective);
        let settled = (objective - next_objective).abs() < tol;
        objective = next_objective;
        if !changed || settled {
            break;
        }
    }
    ClusterAssignment {
        ids: kernel.ids().to_vec(),
        labels,
        k,
        objective,
        iterations,
        history,
    }
}

fn check_k(k: usize, n: usize) -> Result<(), ClusterError> {
    if k == 0 {
        Err(ClusterError::ZeroClusters)
    } else if k > n {
        Err(ClusterError::TooManyClusters { k, n })
    } else {
        Ok(())
    }
}

/// Row-major `n × k` matrix of `d²(i, C_c)`; empty clusters get +∞.
fn distances<T: Scalar>(kernel: &KernelMatrix<T>, labels: &[usize], k: usize) -> Vec<T> {
    let n = kernel.len();
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    // cross[i * k + c] = Σ_{j∈C_c} K_ij
    let mut cross = vec![T::zero(); n * k];
    for i in 0..n {
        for j in 0..n {
            let c = labels[j];
            cross[i * k + c] = cross[i * k + c] + kernel.get(i, j);
        }
    }
    let mut inner = vec![T::zero(); k];
    for j in 0..n {
        inner[labels[j]] = inner[labels[j]] + cross[j * k + labels[j]];
    }
    let mut out = vec![T::infinity(); n * k];
    for i in 0..n {
        for c in 0..k {
            if sizes[c] == 0 {
                continue;
            }
            let size = T::from_usize_lossy(sizes[c]);
            let d = kernel.get(i, i) - T::lit(2.0) * cross[i * k + c] / size + inner[c] / (size * size);
            out[i * k + c] = d.max(T::zero());
        }
    }
    out
}

/// Within-cluster distortion `Σ_i d²(i, C_{label(i)})`.
pub fn objective<T: Scalar>(kernel: &KernelMatrix<T>, labels: &[usize], k: usize) -> T {
    let d2 = distances(kernel, labels, k);
    labels.iter().enumerate().map(|(i, &l)| d2[i * k + l]).sum()
}

fn repair_empty<T: Scalar>(kernel: &KernelMatrix<T>, labels: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let d2 = distances(kernel, labels, k);
        let mut far: Option<(usize, T)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = d2[i * k + l];
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("a cluster with two members exists while k ≤ n");
        labels[i] = empty;
    }
}

/// Mean silhouette with kernel-induced distances `sqrt(d²(i, j))`.
/// Points in singleton clusters score 0, as do points with `a = b = 0`.
pub fn silhouette<T: Scalar>(kernel: &KernelMatrix<T>, labels: &[usize], k: usize) -> T {
    let n = kernel.len();
    if n == 0 {
        return T::zero();
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = T::zero();
    for i in 0..n {
        let own = labels[i];
        if sizes[own] < 2 {
            continue;
        }
        let mut sums = vec![T::zero(); k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] = sums[labels[j]] + kernel.distance2(i, j).sqrt();
            }
        }
        let a = sums[own] / T::from_usize_lossy(sizes[own] - 1);
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / T::from_usize_lossy(sizes[c]))
            .fold(T::infinity(), T::min);
        let denom = a.max(b);
        if b.is_finite() && denom > T::zero() {
            total = total + (b - a) / denom;
        }
    }
    total / T::from_usize_lossy(n)
}

/// Options for [`choose_k`] and [`cluster_auto`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSearch {
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KSearch {
    fn default() -> Self {
        Self {
            k_min: 3,
            k_max: 6,
            seed: 42,
            max_iter: 100,
            tol: 1e-9,
        }
    }
}

/// Picks the number of topics by mean silhouette over `[k_min, k_max]`
/// (clamped to `n`); ties go to the smaller k. With fewer than `k_min`
/// points the answer is `min(n, 3)`.
pub fn choose_k<T: Scalar>(kernel: &KernelMatrix<T>, search: KSearch) -> usize {
    cluster_auto(kernel, search).map_or(0, |a| a.k)
}

/// [`choose_k`] that also returns the winning assignment. `None` for an
/// empty kernel.
pub fn cluster_auto<T: Scalar>(kernel: &KernelMatrix<T>, search: KSearch) -> Option<ClusterAssignment<T>> {
    let n = kernel.len();
    if n == 0 {
        return None;
    }
    let tol = T::lit(search.tol);
    if n < search.k_min {
        let k = n.min(3);
        return kernel_kmeans(kernel, k, search.seed, search.max_iter, tol).ok();
    }
    let k_max = search.k_max.min(n).max(search.k_min);
    let mut best: Option<(T, ClusterAssignment<T>)> = None;
    for k in search.k_min..=k_max {
        let assignment = kernel_kmeans(kernel, k, search.seed, search.max_iter, tol).ok()?;
        let score = silhouette(kernel, &assignment.labels, k);
        let better = best
            .as_ref()
            .is_none_or(|(s, _)| score > *s + T::lit(1e-12));
        if better {
            best = Some((score, assignment));
        }
    }
    best.map(|(_, a)| a)
}
