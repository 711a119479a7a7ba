//! Relevance of candidates to the target and ranking inside each topic.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::clustering::ClusterAssignment;
use crate::scalar::{dot, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelevanceError {
    #[error("hop distance must be at least 1")]
    InvalidHop,
    #[error("no relevance score for {0:?}")]
    MissingScore(String),
    #[error("no pagerank score for {0:?}")]
    MissingPagerank(String),
}

/// `total = cosine + λ · citation_bonus`, with `citation_bonus = 1 / hop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceScore<T> {
    pub cosine: T,
    pub citation_bonus: T,
    pub total: T,
}

pub fn score_relevance<T: Scalar>(
    target: &[T],
    paper: &[T],
    hop: u32,
    lambda: T,
) -> Result<RelevanceScore<T>, RelevanceError> {
    if hop == 0 {
        return Err(RelevanceError::InvalidHop);
    }
    let cosine = dot(target, paper);
    let citation_bonus = T::one() / T::lit(f64::from(hop));
    Ok(RelevanceScore {
        cosine,
        citation_bonus,
        total: cosine + lambda * citation_bonus,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedMember<T> {
    pub id: String,
    pub score: RelevanceScore<T>,
    pub pagerank: T,
}

/// One topic's members, most relevant first. Ties fall to the higher
/// PageRank, then the smaller id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCluster<T> {
    pub cluster: usize,
    pub members: Vec<RankedMember<T>>,
    top_k: usize,
}

impl<T: Scalar> RankedCluster<T> {
    /// The top-`k` prefix chosen for the survey card.
    pub fn selected(&self) -> &[RankedMember<T>] {
        &self.members[..self.top_k.min(self.members.len())]
    }

    pub fn max_total(&self) -> Option<T> {
        self.members.first().map(|m| m.score.total)
    }
}

pub fn rank_within_clusters<T: Scalar>(
    assignment: &ClusterAssignment<T>,
    scores: &BTreeMap<String, RelevanceScore<T>>,
    pagerank: &BTreeMap<String, T>,
    top_k: usize,
) -> Result<Vec<RankedCluster<T>>, RelevanceError> {
    let mut clusters: Vec<Vec<RankedMember<T>>> = vec![Vec::new(); assignment.k];
    for (id, &label) in assignment.ids.iter().zip(&assignment.labels) {
        let score = *scores
            .get(id)
            .ok_or_else(|| RelevanceError::MissingScore(id.clone()))?;
        let pr = *pagerank
            .get(id)
            .ok_or_else(|| RelevanceError::MissingPagerank(id.clone()))?;
        clusters[label].push(RankedMember {
            id: id.clone(),
            score,
            pagerank: pr,
        });
    }
    Ok(clusters
        .into_iter()
        .enumerate()
        .map(|(cluster, mut members)| {
            members.sort_by(compare_members);
            RankedCluster {
                cluster,
                members,
                top_k,
            }
        })
        .collect())
}

fn compare_members<T: Scalar>(a: &RankedMember<T>, b: &RankedMember<T>) -> Ordering {
    b.score
        .total
        .partial_cmp(&a.score.total)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.pagerank.partial_cmp(&a.pagerank).unwrap_or(Ordering::Equal))
        .then_with(|| a.id.cmp(&b.id))
}

/// Ids of the first `min(k, |members|)` ranked members.
pub fn select_topic_papers<T: Scalar>(ranked: &RankedCluster<T>, k: usize) -> Vec<String> {
    ranked.members.iter().take(k).map(|m| m.id.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_formula() {
        let s = score_relevance(&[1.0, 0.0], &[1.0, 0.0], 1, 0.5).unwrap();
        assert_eq!(s.total, 1.5);
        let s = score_relevance(&[1.0, 0.0], &[0.0, 1.0], 2, 0.5).unwrap();
        assert_eq!(s.total, 0.25);
        assert_eq!(s.citation_bonus, 0.5);
        let s = score_relevance(&[1.0f64, 0.0], &[0.6, 0.8], 1, 0.5).unwrap();
        assert!((s.total - 1.1).abs() < 1e-15);
        assert_eq!(score_relevance(&[1.0], &[1.0], 0, 0.5), Err(RelevanceError::InvalidHop));
    }

    fn assignment(ids: &[&str], labels: &[usize], k: usize) -> ClusterAssignment<f64> {
        ClusterAssignment {
            ids: ids.iter().map(|s| s.to_string()).collect(),
            labels: labels.to_vec(),
            k,
            objective: 0.0,
            iterations: 0,
            history: vec![],
        }
    }

    fn score(total: f64) -> RelevanceScore<f64> {
        RelevanceScore { cosine: total, citation_bonus: 1.0, total }
    }

    fn map<V: Copy>(pairs: &[(&str, V)]) -> BTreeMap<String, V> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn ranking_order_and_ties() {
        let a = assignment(&["a", "b", "c", "d", "e"], &[0, 0, 0, 1, 1], 2);
        let scores = map(&[("a", score(1.2)), ("b", score(0.8)), ("c", score(1.5)), ("d", score(1.0)), ("e", score(1.0))]);
        let pr = map(&[("a", 0.1), ("b", 0.1), ("c", 0.1), ("d", 0.02), ("e", 0.05)]);
        let ranked = rank_within_clusters(&a, &scores, &pr, 5).unwrap();
        let ids = |c: &RankedCluster<f64>| c.members.iter().map(|m| m.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&ranked[0]), vec!["c", "a", "b"]);
        assert_eq!(ids(&ranked[1]), vec!["e", "d"]);
        assert_eq!(ranked[0].max_total(), Some(1.5));
    }

    #[test]
    fn missing_inputs_are_errors() {
        let a = assignment(&["a"], &[0], 1);
        assert_eq!(
            rank_within_clusters(&a, &BTreeMap::new(), &map(&[("a", 0.1)]), 5),
            Err(RelevanceError::MissingScore("a".into()))
        );
        assert_eq!(
            rank_within_clusters(&a, &map(&[("a", score(1.0))]), &BTreeMap::new(), 5),
            Err(RelevanceError::MissingPagerank("a".into()))
        );
    }

    #[test]
    fn selection_is_prefix() {
        let ids: Vec<String> = (0..8).map(|i| format!("p{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let a = assignment(&refs, &[0; 8], 1);
        let scores: BTreeMap<_, _> = ids.iter().enumerate().map(|(i, id)| (id.clone(), score(i as f64))).collect();
        let pr: BTreeMap<_, _> = ids.iter().map(|id| (id.clone(), 0.1)).collect();
        let ranked = rank_within_clusters(&a, &scores, &pr, 5).unwrap();
        let picked = select_topic_papers(&ranked[0], 5);
        assert_eq!(picked, vec!["p7", "p6", "p5", "p4", "p3"]);
        assert_eq!(ranked[0].selected().len(), 5);
        assert_eq!(select_topic_papers(&ranked[0], 20).len(), 8);
        let empty = RankedCluster::<f64> { cluster: 0, members: vec![], top_k: 5 };
        assert!(select_topic_papers(&empty, 5).is_empty());
        assert!(empty.selected().is_empty());
    }
}
