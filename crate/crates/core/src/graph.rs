//! Citation graph and candidate selection.
//!
//! Candidates on each side of the target are found by expanding whole hop
//! levels along references (or citations) until strictly more than
//! `threshold` papers have been collected, the frontier runs dry, or
//! `max_hops` levels are done. PageRank over the expanded set then keeps the
//! strongest `k` papers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusStore;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown paper id {0:?}")]
    UnknownNode(String),
    #[error("pagerank needs at least one node")]
    EmptyNodeSet,
    #[error("no score for expanded member {0:?}")]
    MissingScore(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    References,
    Citations,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::References => "references",
            Direction::Citations => "citations",
        }
    }
}

/// Directed citation graph. Nodes are stored in ascending id order so node
/// indices order the same way ids do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationGraph {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    edge_count: usize,
}

impl CitationGraph {
    pub fn build(store: &CorpusStore) -> Self {
        let ids: Vec<String> = store.iter().map(|p| p.id.clone()).collect();
        let index: BTreeMap<String, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut out_edges = vec![Vec::new(); ids.len()];
        let mut in_edges = vec![Vec::new(); ids.len()];
        for (from, paper) in store.iter().enumerate() {
            for r in &paper.reference_ids {
                let Some(&to) = index.get(r) else { continue };
                if to != from {
                    out_edges[from].push(to);
                }
            }
            out_edges[from].sort_unstable();
            out_edges[from].dedup();
        }
        let mut edge_count = 0;
        for (from, targets) in out_edges.iter().enumerate() {
            edge_count += targets.len();
            for &to in targets {
                in_edges[to].push(from);
            }
        }
        // `from` ascends in the loop above, so every in-list is already sorted.
        Self {
            ids,
            index,
            out_edges,
            in_edges,
            edge_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Papers cited by `id`, ascending.
    pub fn references(&self, id: &str) -> impl Iterator<Item = &str> {
        self.neighbor_ids(id, &self.out_edges)
    }

    /// Papers citing `id`, ascending.
    pub fn citations(&self, id: &str) -> impl Iterator<Item = &str> {
        self.neighbor_ids(id, &self.in_edges)
    }

    pub fn reference_count(&self, id: &str) -> usize {
        self.index_of(id).map_or(0, |i| self.out_edges[i].len())
    }

    pub fn citation_count(&self, id: &str) -> usize {
        self.index_of(id).map_or(0, |i| self.in_edges[i].len())
    }

    pub(crate) fn out_indices(&self, index: usize) -> &[usize] {
        &self.out_edges[index]
    }

    pub(crate) fn in_indices(&self, index: usize) -> &[usize] {
        &self.in_edges[index]
    }

    fn neighbor_ids<'a>(
        &'a self,
        id: &str,
        lists: &'a [Vec<usize>],
    ) -> impl Iterator<Item = &'a str> + 'a {
        let list: &[usize] = self.index_of(id).map_or(&[], |i| &lists[i]);
        list.iter().map(|&j| self.ids[j].as_str())
    }

    fn neighbors(&self, index: usize, direction: Direction) -> &[usize] {
        match direction {
            Direction::References => &self.out_edges[index],
            Direction::Citations => &self.in_edges[index],
        }
    }

    /// Multi-hop expansion from `target` along `direction`.
    pub fn expand(
        &self,
        target: &str,
        direction: Direction,
        threshold: usize,
        max_hops: u32,
    ) -> Result<ExpandedSet, GraphError> {
        let root = self
            .index_of(target)
            .ok_or_else(|| GraphError::UnknownNode(target.to_string()))?;
        let mut hop_of: BTreeMap<usize, u32> = BTreeMap::new();
        let mut frontier = vec![root];
        let mut exhausted = false;
        for hop in 1..=max_hops {
            let mut next = BTreeSet::new();
            for &node in &frontier {
                for &n in self.neighbors(node, direction) {
                    if n != root && !hop_of.contains_key(&n) {
                        next.insert(n);
                    }
                }
            }
            if next.is_empty() {
                exhausted = true;
                break;
            }
            for &n in &next {
                hop_of.insert(n, hop);
            }
            if hop_of.len() > threshold {
                break;
            }
            frontier = next.into_iter().collect();
        }
        Ok(ExpandedSet {
            direction,
            members: hop_of
                .into_iter()
                .map(|(i, h)| (self.ids[i].clone(), h))
                .collect(),
            exhausted,
        })
    }

    /// PageRank on the subgraph induced by `nodes`.
    ///
    /// Each step gives every node `(1 - damping) / n` teleport mass plus the
    /// damped mass of its in-set citers split evenly over their in-set
    /// references; nodes with no in-set out-edges spread their damped mass
    /// uniformly. Iteration stops once the L1 change drops below `tol` or
    /// after `max_iter` steps. Ids outside the graph become isolated nodes.
    pub fn pagerank<T: Scalar>(
        &self,
        nodes: &BTreeSet<String>,
        damping: T,
        tol: T,
        max_iter: usize,
    ) -> Result<BTreeMap<String, T>, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::EmptyNodeSet);
        }
        let members: Vec<&String> = nodes.iter().collect();
        let local: BTreeMap<usize, usize> = members
            .iter()
            .enumerate()
            .filter_map(|(li, id)| self.index_of(id).map(|gi| (gi, li)))
            .collect();
        let out: Vec<Vec<usize>> = members
            .iter()
            .map(|id| match self.index_of(id) {
                Some(gi) => self.out_edges[gi]
                    .iter()
                    .filter_map(|g| local.get(g).copied())
                    .collect(),
                None => Vec::new(),
            })
            .collect();

        let n = members.len();
        let n_t = T::from_usize_lossy(n);
        let teleport = (T::one() - damping) / n_t;
        let mut rank = vec![T::one() / n_t; n];
        let mut next = vec![T::zero(); n];
        for _ in 0..max_iter {
            let dangling: T = (0..n)
                .filter(|&i| out[i].is_empty())
                .map(|i| rank[i])
                .sum();
            let base = teleport + damping * dangling / n_t;
            next.iter_mut().for_each(|x| *x = base);
            for (i, targets) in out.iter().enumerate() {
                if targets.is_empty() {
                    continue;
                }
                let share = damping * rank[i] / T::from_usize_lossy(targets.len());
                for &j in targets {
                    next[j] = next[j] + share;
                }
            }
            let total: T = next.iter().copied().sum();
            next.iter_mut().for_each(|x| *x = *x / total);
            let delta: T = rank
                .iter()
                .zip(&next)
                .map(|(&a, &b)| (a - b).abs())
                .sum();
            std::mem::swap(&mut rank, &mut next);
            if delta < tol {
                break;
            }
        }
        Ok(members.into_iter().cloned().zip(rank).collect())
    }
}

/// Papers reached by multi-hop expansion, with their first-seen hop level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedSet {
    pub direction: Direction,
    pub members: BTreeMap<String, u32>,
    pub exhausted: bool,
}

impl ExpandedSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn hop(&self, id: &str) -> Option<u32> {
        self.members.get(id).copied()
    }

    /// Keeps the strongest `k` members by score, ties by ascending id.
    pub fn select_top<T: Scalar>(
        &self,
        scores: &BTreeMap<String, T>,
        k: usize,
    ) -> Result<CandidateSet<T>, GraphError> {
        let mut papers = self
            .members
            .iter()
            .map(|(id, &hop)| {
                scores
                    .get(id)
                    .map(|&pagerank| Candidate {
                        id: id.clone(),
                        pagerank,
                        hop,
                    })
                    .ok_or_else(|| GraphError::MissingScore(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        // Members iterate in ascending id order and the sort is stable.
        papers.sort_by(|a, b| b.pagerank.partial_cmp(&a.pagerank).unwrap_or(std::cmp::Ordering::Equal));
        papers.truncate(k);
        Ok(CandidateSet {
            direction: self.direction,
            papers,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub id: String,
    pub pagerank: T,
    pub hop: u32,
}

/// The PageRank-selected candidates of one direction, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<T> {
    pub direction: Direction,
    pub papers: Vec<Candidate<T>>,
}

impl<T> CandidateSet<T> {
    pub fn empty(direction: Direction) -> Self {
        Self {
            direction,
            papers: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph_from(edges: &[(&str, &str)], extra: &[&str]) -> CitationGraph {
        let mut refs: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for id in extra {
            refs.entry(id.to_string()).or_default();
        }
        for (a, b) in edges {
            refs.entry(a.to_string()).or_default().push(b.to_string());
            refs.entry(b.to_string()).or_default();
        }
        let lines: Vec<String> = refs
            .iter()
            .map(|(id, r)| {
                serde_json::json!({"id": id, "title": "", "abstract": "", "year": 2000,
                    "authors": [], "venue": "", "references": r})
                .to_string()
            })
            .collect();
        CitationGraph::build(&CorpusStore::from_reader(lines.join("\n").as_bytes()).unwrap())
    }

    #[test]
    fn edges_and_transpose() {
        let g = graph_from(&[("A", "B")], &[]);
        assert_eq!(g.references("A").collect::<Vec<_>>(), vec!["B"]);
        assert_eq!(g.citations("B").collect::<Vec<_>>(), vec!["A"]);
        assert_eq!(g.edge_count(), 1);
        let g = graph_from(&[], &["A", "B", "C"]);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 3);
    }

    fn diamond() -> CitationGraph {
        graph_from(&[("T", "A"), ("T", "B"), ("A", "C"), ("B", "C"), ("B", "D")], &[])
    }

    #[test]
    fn expansion_exhausts() {
        let e = diamond().expand("T", Direction::References, 100, 5).unwrap();
        let expect: BTreeMap<String, u32> =
            [("A", 1), ("B", 1), ("C", 2), ("D", 2)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        assert_eq!(e.members, expect);
        assert!(e.exhausted);
    }

    #[test]
    fn expansion_stops_past_threshold() {
        let e = diamond().expand("T", Direction::References, 2, 5).unwrap();
        assert_eq!(e.len(), 4);
        assert!(!e.exhausted);
    }

    #[test]
    fn expansion_respects_hop_cap() {
        let g = graph_from(&[("T", "1"), ("1", "2"), ("2", "3"), ("3", "4"), ("4", "5"), ("5", "6")], &[]);
        let e = g.expand("T", Direction::References, 100, 5).unwrap();
        assert_eq!(e.len(), 5);
        assert_eq!(e.hop("5"), Some(5));
        assert_eq!(e.hop("6"), None);
        assert!(!e.exhausted);
    }

    #[test]
    fn citation_expansion_and_unknown_target() {
        let g = diamond();
        let e = g.expand("C", Direction::Citations, 100, 5).unwrap();
        assert_eq!(e.hop("A"), Some(1));
        assert_eq!(e.hop("T"), Some(2));
        assert_eq!(
            g.expand("nope", Direction::Citations, 100, 5),
            Err(GraphError::UnknownNode("nope".into()))
        );
    }

    #[test]
    fn target_never_member_even_on_cycles() {
        let g = graph_from(&[("T", "A"), ("A", "T")], &[]);
        let e = g.expand("T", Direction::References, 100, 5).unwrap();
        assert_eq!(e.members.keys().collect::<Vec<_>>(), vec!["A"]);
        assert!(e.exhausted);
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn pagerank_small_cases() {
        let g = graph_from(&[("A", "B"), ("B", "A"), ("B", "C")], &[]);
        let one = g.pagerank(&set(&["A"]), 0.85, 1e-10, 200).unwrap();
        assert_eq!(one["A"], 1.0);
        let two = g.pagerank(&set(&["A", "B"]), 0.85f64, 1e-10, 200).unwrap();
        assert!((two["A"] - 0.5).abs() < 1e-12 && (two["B"] - 0.5).abs() < 1e-12);
        assert_eq!(
            g.pagerank::<f64>(&BTreeSet::new(), 0.85, 1e-10, 200),
            Err(GraphError::EmptyNodeSet)
        );
    }

    #[test]
    fn pagerank_chain_matches_frozen_oracle() {
        // Frozen from an independent dense power iteration run to 1e-14.
        let g = graph_from(&[("A", "B"), ("B", "C")], &[]);
        let pr = g.pagerank(&set(&["A", "B", "C"]), 0.85f64, 1e-10, 200).unwrap();
        assert!((pr["A"] - 0.184_417).abs() < 1e-3);
        assert!((pr["B"] - 0.341_171).abs() < 1e-3);
        assert!((pr["C"] - 0.474_412).abs() < 1e-3);
        let pr32 = g.pagerank(&set(&["A", "B", "C"]), 0.85f32, 1e-6, 200).unwrap();
        assert!((pr32["C"] - 0.474_412).abs() < 1e-3);
    }

    #[test]
    fn select_top_ties_and_sizes() {
        let e = ExpandedSet {
            direction: Direction::References,
            members: [("p2".to_string(), 1), ("p1".to_string(), 2), ("p3".to_string(), 1)]
                .into_iter()
                .collect(),
            exhausted: true,
        };
        let scores: BTreeMap<String, f64> =
            [("p1", 0.25), ("p2", 0.25), ("p3", 0.5)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let c = e.select_top(&scores, 100).unwrap();
        let ids: Vec<_> = c.papers.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, vec!["p3", "p1", "p2"]);
        assert_eq!(c.papers[1].hop, 2);
        assert_eq!(e.select_top(&scores, 2).unwrap().len(), 2);
        let mut partial = scores.clone();
        partial.remove("p3");
        assert_eq!(e.select_top(&partial, 5), Err(GraphError::MissingScore("p3".into())));
    }
}
