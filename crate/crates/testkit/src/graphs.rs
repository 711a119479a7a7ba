//! Random citation graphs and plain-loop graph oracles.
//!
//! An edge `(a, b)` means paper `a` references paper `b`.

use std::collections::{BTreeMap, VecDeque};

use ideareader_core::{CitationGraph, CorpusStore};
use rand::Rng;

pub fn node_id(i: usize) -> String {
    format!("n{i:04}")
}

/// A corpus with `n` bare papers wired by `edges`.
pub fn corpus_from_edges(n: usize, edges: &[(usize, usize)]) -> (CorpusStore, CitationGraph) {
    let mut refs: Vec<Vec<String>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        refs[a].push(node_id(b));
    }
    let lines: Vec<String> = (0..n)
        .map(|i| {
            serde_json::json!({
                "id": node_id(i),
                "title": format!("Paper {i}"),
                "abstract": "",
                "year": 2000,
                "authors": ["A Writer"],
                "venue": "",
                "references": refs[i],
            })
            .to_string()
        })
        .collect();
    let store = CorpusStore::from_reader(lines.join("\n").as_bytes()).expect("generated corpus");
    let graph = CitationGraph::build(&store);
    (store, graph)
}

/// Random directed graph on `1..=max_nodes` nodes; cycles allowed, no
/// self-loops or repeated edges.
pub fn random_digraph(rng: &mut impl Rng, max_nodes: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.random_range(1..=max_nodes);
    let p = rng.random_range(0.0..0.6);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    (n, edges)
}

/// Random DAG on `n` nodes where node `a` may reference any `b > a`; each
/// node gets up to `max_out` references.
pub fn random_dag(rng: &mut impl Rng, n: usize, max_out: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n.saturating_sub(1) {
        let out = rng.random_range(0..=max_out);
        let mut chosen = std::collections::BTreeSet::new();
        for _ in 0..out {
            chosen.insert(rng.random_range(a + 1..n));
        }
        edges.extend(chosen.into_iter().map(|b| (a, b)));
    }
    edges
}

/// Dense power iteration for PageRank over all `n` nodes.
///
/// Builds the column-stochastic transition matrix explicitly (a citing
/// paper passes its mass to its references, dangling nodes to everyone)
/// and iterates `x ← d·M·x + (1−d)/n` until the L1 change is below 1e-15.
pub fn pagerank_oracle(n: usize, edges: &[(usize, usize)], damping: f64) -> Vec<f64> {
    let mut out_degree = vec![0usize; n];
    for &(a, _) in edges {
        out_degree[a] += 1;
    }
    let mut m = vec![vec![0.0f64; n]; n];
    for &(a, b) in edges {
        m[b][a] += 1.0 / out_degree[a] as f64;
    }
    for (a, &deg) in out_degree.iter().enumerate() {
        if deg == 0 {
            for row in m.iter_mut() {
                row[a] = 1.0 / n as f64;
            }
        }
    }
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n)
            .map(|i| damping * (0..n).map(|j| m[i][j] * x[j]).sum::<f64>() + (1.0 - damping) / n as f64)
            .collect();
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    x
}

/// Level-BFS expansion oracle: computes every node's shortest hop distance
/// from `root` first, then accepts whole levels 1, 2, ... until the
/// accepted count exceeds `threshold`, a level is empty (exhausted) or
/// `max_hops` levels were taken.
pub fn expansion_oracle(
    n: usize,
    edges: &[(usize, usize)],
    root: usize,
    follow_references: bool,
    threshold: usize,
    max_hops: u32,
) -> (BTreeMap<usize, u32>, bool) {
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in edges {
        if follow_references {
            adjacency[a].push(b);
        } else {
            adjacency[b].push(a);
        }
    }
    let mut dist = vec![u32::MAX; n];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if dist[w] == u32::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let mut accepted = BTreeMap::new();
    for hop in 1..=max_hops {
        let level: Vec<usize> = (0..n).filter(|&v| dist[v] == hop).collect();
        if level.is_empty() {
            return (accepted, true);
        }
        for v in level {
            accepted.insert(v, hop);
        }
        if accepted.len() > threshold {
            break;
        }
    }
    (accepted, false)
}
