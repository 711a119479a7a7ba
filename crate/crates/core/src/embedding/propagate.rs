use std::collections::{BTreeSet, HashMap};

use crate::graph::CitationGraph;
use crate::scalar::Scalar;

use super::{EmbeddingMatrix, Stage};

/// Smooths rows over the citation structure.
///
/// Works on the undirected subgraph induced by the matrix ids with a self
/// loop on every node. With `P = D⁻¹(A + I)`, each of the `steps` rounds
/// applies `R ← mix·R + (1 − mix)·P·R`; rows are re-normalized at the end.
/// Ids missing from the graph behave as isolated nodes.
pub fn spectral_propagate<T: Scalar>(
    graph: &CitationGraph,
    emb: &EmbeddingMatrix<T>,
    steps: usize,
    mix: T,
) -> EmbeddingMatrix<T> {
    let n = emb.len();
    let dim = emb.dim();
    let local: HashMap<usize, usize> = emb
        .ids()
        .iter()
        .enumerate()
        .filter_map(|(li, id)| graph.index_of(id).map(|gi| (gi, li)))
        .collect();
    let neighborhoods: Vec<Vec<usize>> = emb
        .ids()
        .iter()
        .enumerate()
        .map(|(li, id)| {
            let mut hood = BTreeSet::from([li]);
            if let Some(gi) = graph.index_of(id) {
                hood.extend(
                    graph
                        .out_indices(gi)
                        .iter()
                        .chain(graph.in_indices(gi))
                        .filter_map(|g| local.get(g).copied()),
                );
            }
            hood.into_iter().collect()
        })
        .collect();

    let mut current: Vec<T> = emb.rows().flatten().copied().collect();
    let mut next = vec![T::zero(); n * dim];
    let keep = mix;
    let spread = T::one() - mix;
    for _ in 0..steps {
        for (i, hood) in neighborhoods.iter().enumerate() {
            let weight = spread / T::from_usize_lossy(hood.len());
            let out = &mut next[i * dim..(i + 1) * dim];
            for (o, &x) in out.iter_mut().zip(&current[i * dim..(i + 1) * dim]) {
                *o = keep * x;
            }
            for &j in hood {
                for (o, &x) in out.iter_mut().zip(&current[j * dim..(j + 1) * dim]) {
                    *o = *o + weight * x;
                }
            }
        }
        std::mem::swap(&mut current, &mut next);
    }
    let mut out = EmbeddingMatrix::from_rows(emb.ids().to_vec(), dim, current, Stage::Propagated);
    if emb.is_fallback() {
        out = out.flagged_fallback();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusStore;

    fn graph(edges: &[(&str, &str)], nodes: &[&str]) -> CitationGraph {
        let lines: Vec<String> = nodes
            .iter()
            .map(|id| {
                let refs: Vec<&str> = edges.iter().filter(|(a, _)| a == id).map(|(_, b)| *b).collect();
                serde_json::json!({"id": id, "title": "", "abstract": "", "year": 2000,
                    "authors": [], "venue": "", "references": refs})
                .to_string()
            })
            .collect();
        CitationGraph::build(&CorpusStore::from_reader(lines.join("\n").as_bytes()).unwrap())
    }

    fn matrix(rows: &[[f64; 2]]) -> EmbeddingMatrix<f64> {
        let ids = (0..rows.len()).map(|i| format!("n{i}")).collect();
        EmbeddingMatrix::from_rows(ids, 2, rows.iter().flatten().copied().collect(), Stage::Fused)
    }

    #[test]
    fn isolated_node_unchanged() {
        let g = graph(&[("n1", "n2")], &["n0", "n1", "n2"]);
        let m = matrix(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let p = spectral_propagate(&g, &m, 3, 0.5);
        assert_eq!(p.row(0), m.row(0));
        assert_eq!(p.stage(), Stage::Propagated);
    }

    #[test]
    fn identical_rows_stay_identical() {
        let g = graph(&[("n0", "n1"), ("n1", "n2"), ("n2", "n0")], &["n0", "n1", "n2"]);
        let m = matrix(&[[0.6, 0.8]; 3]);
        let p = spectral_propagate(&g, &m, 3, 0.5);
        for i in 0..3 {
            for (a, b) in p.row(i).iter().zip(m.row(0)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_mix_is_identity_on_directions() {
        let g = graph(&[("n0", "n1")], &["n0", "n1"]);
        let m = matrix(&[[1.0, 0.0], [0.0, 1.0]]);
        let p = spectral_propagate(&g, &m, 5, 1.0);
        assert_eq!(p.row(0), m.row(0));
        assert_eq!(p.row(1), m.row(1));
    }

    #[test]
    fn neighbours_pull_together() {
        let g = graph(&[("n0", "n1")], &["n0", "n1"]);
        let m = matrix(&[[1.0, 0.0], [0.0, 1.0]]);
        let p = spectral_propagate(&g, &m, 1, 0.5);
        // P·R averages the two rows, so each row becomes (0.75, 0.25) up to order.
        let cos: f64 = p.row(0).iter().zip(p.row(1)).map(|(a, b)| a * b).sum();
        assert!((cos - 0.6).abs() < 1e-12);
    }
}
