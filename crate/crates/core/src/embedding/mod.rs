//! Paper representations: TF-IDF rows reduced to dense vectors, fused with
//! provider embeddings and smoothed over the citation graph.

mod propagate;
mod reduce;
mod tfidf;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::{EmbedRequest, EmbedResponse, ProviderEndpoint, ProviderError};
use crate::scalar::{normalize_in_place, Scalar};

pub use propagate::spectral_propagate;
pub use reduce::reduce_dense;
pub use tfidf::{SparseVector, TfidfModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("no documents to fit")]
    NoDocuments,
    #[error("every document is empty after tokenization")]
    EmptyVocabulary,
    #[error("dense reduction needs at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("every row of the matrix is zero")]
    AllZeroMatrix,
    #[error("matrices cover different paper ids")]
    IdMismatch,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    TfidfDense,
    Provider,
    Fused,
    Propagated,
}

/// Dense row matrix, one row per paper id. Rows are unit length unless
/// flagged zero, in which case they are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    ids: Vec<String>,
    dim: usize,
    data: Vec<T>,
    zero: Vec<bool>,
    stage: Stage,
    fallback: bool,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    /// Builds a matrix from row-major `data`, normalizing every row.
    ///
    /// Panics if `data.len() != ids.len() * dim` or ids repeat.
    pub fn from_rows(ids: Vec<String>, dim: usize, mut data: Vec<T>, stage: Stage) -> Self {
        assert_eq!(data.len(), ids.len() * dim, "row-major data has the wrong length");
        let mut seen = std::collections::HashSet::new();
        assert!(ids.iter().all(|id| seen.insert(id)), "embedding ids must be unique");
        let zero = if dim == 0 {
            vec![true; ids.len()]
        } else {
            data.chunks_mut(dim).map(|row| !normalize_in_place(row)).collect()
        };
        Self {
            ids,
            dim,
            data,
            zero,
            stage,
            fallback: false,
        }
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

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    /// True when the rows came from the offline fallback instead of a provider.
    pub fn is_fallback(&self) -> bool {
        self.fallback
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.zero[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn row_of(&self, id: &str) -> Option<&[T]> {
        self.index_of(id).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// Sub-matrix for `ids`, in that order. `None` if an id is missing.
    pub fn select(&self, ids: &[String]) -> Option<Self> {
        let index: HashMap<&str, usize> =
            self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        let mut zero = Vec::with_capacity(ids.len());
        for id in ids {
            let i = *index.get(id.as_str())?;
            data.extend_from_slice(self.row(i));
            zero.push(self.zero[i]);
        }
        Some(Self {
            ids: ids.to_vec(),
            dim: self.dim,
            data,
            zero,
            stage: self.stage,
            fallback: self.fallback,
        })
    }

    pub(crate) fn with_stage(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }

    pub(crate) fn flagged_fallback(mut self) -> Self {
        self.fallback = true;
        self
    }
}

/// Concatenates the rows of `a` and `b` and re-normalizes, so each nonzero
/// block contributes with weight `1/sqrt(2)`.
pub fn fuse_embeddings<T: Scalar>(
    a: &EmbeddingMatrix<T>,
    b: &EmbeddingMatrix<T>,
) -> Result<EmbeddingMatrix<T>, EmbeddingError> {
    if a.ids != b.ids {
        return Err(EmbeddingError::IdMismatch);
    }
    let dim = a.dim + b.dim;
    let mut data = Vec::with_capacity(a.len() * dim);
    for i in 0..a.len() {
        data.extend_from_slice(a.row(i));
        data.extend_from_slice(b.row(i));
    }
    let mut fused = EmbeddingMatrix::from_rows(a.ids.clone(), dim, data, Stage::Fused);
    fused.fallback = a.fallback || b.fallback;
    Ok(fused)
}

/// Dense text embeddings for `texts` (one row per id).
///
/// With a configured endpoint the texts go out in batches of `batch_size`
/// over `POST {base_url}/embed`; every returned vector must have the
/// endpoint's `expected_dim`. Without one, the rows are the dense reduction
/// of the TF-IDF vectors, flagged as fallback.
pub fn fetch_dense_embeddings<T: Scalar>(
    endpoint: &ProviderEndpoint,
    ids: &[String],
    texts: &[String],
    tfidf: &TfidfModel<T>,
    fallback_dim: usize,
    batch_size: usize,
) -> Result<EmbeddingMatrix<T>, EmbeddingError> {
    assert_eq!(ids.len(), texts.len(), "one text per id");
    if !endpoint.is_configured() {
        let rows: Vec<SparseVector<T>> = texts.iter().map(|t| tfidf.embed(t)).collect();
        return Ok(reduce_dense(ids, &rows, fallback_dim)?
            .with_stage(Stage::Provider)
            .flagged_fallback());
    }
    let dim = endpoint.expected_dim;
    let mut data = Vec::with_capacity(texts.len() * dim);
    let mut row = 0;
    for batch in texts.chunks(batch_size.max(1)) {
        let response: EmbedResponse = endpoint.post_json("embed", &EmbedRequest { texts: batch })?;
        if response.vectors.len() != batch.len() {
            return Err(ProviderError::RowCountMismatch {
                expected: batch.len(),
                found: response.vectors.len(),
            }
            .into());
        }
        for v in response.vectors {
            if v.len() != dim {
                return Err(ProviderError::DimensionMismatch {
                    row,
                    expected: dim,
                    found: v.len(),
                }
                .into());
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ProviderError::Malformed(format!("non-finite value in vector {row}")).into());
            }
            data.extend(v.into_iter().map(T::lit));
            row += 1;
        }
    }
    Ok(EmbeddingMatrix::from_rows(ids.to_vec(), dim, data, Stage::Provider))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::stub;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn from_rows_normalizes_and_flags() {
        let m = EmbeddingMatrix::from_rows(ids(2), 2, vec![3.0, 4.0, 0.0, 0.0], Stage::Fused);
        assert_eq!(m.row(0), &[0.6, 0.8]);
        assert!(m.is_zero_row(1) && !m.is_zero_row(0));
        let sub = m.select(&["p1".to_string(), "p0".to_string()]).unwrap();
        assert_eq!(sub.row(1), &[0.6, 0.8]);
        assert!(m.select(&["zz".to_string()]).is_none());
    }

    #[test]
    fn fuse_disjoint_one_hots() {
        let a = EmbeddingMatrix::from_rows(ids(1), 2, vec![1.0, 0.0], Stage::TfidfDense);
        let b = EmbeddingMatrix::from_rows(ids(1), 2, vec![0.0, 1.0], Stage::Provider);
        let f = fuse_embeddings(&a, &b).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(f.stage(), Stage::Fused);
        for (x, y) in f.row(0).iter().zip([h, 0.0, 0.0, h]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn fuse_with_zero_row_keeps_other_block() {
        let a = EmbeddingMatrix::from_rows(ids(1), 2, vec![0.6, 0.8], Stage::TfidfDense);
        let b = EmbeddingMatrix::from_rows(ids(1), 3, vec![0.0; 3], Stage::Provider);
        let f = fuse_embeddings(&a, &b).unwrap();
        assert_eq!(f.row(0), &[0.6, 0.8, 0.0, 0.0, 0.0]);
        let c = EmbeddingMatrix::from_rows(ids(2), 2, vec![1.0; 4], Stage::Provider);
        assert_eq!(fuse_embeddings(&a, &c), Err(EmbeddingError::IdMismatch));
    }

    fn model() -> TfidfModel<f64> {
        TfidfModel::fit(&["graph kernels", "neural nets", "graph nets"]).unwrap()
    }

    #[test]
    fn fallback_without_endpoint() {
        let texts: Vec<String> = ["graph kernels", "neural nets", "graph nets"].map(String::from).to_vec();
        let m = fetch_dense_embeddings(&ProviderEndpoint::absent(), &ids(3), &texts, &model(), 128, 64)
            .unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.stage(), Stage::Provider);
        assert!(m.is_fallback());
        let again = fetch_dense_embeddings(&ProviderEndpoint::absent(), &ids(3), &texts, &model(), 128, 64)
            .unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn provider_rows_are_used_and_normalized() {
        let stub = stub::serve(200, r#"{"vectors": [[2.0, 0.0], [0.0, 1.0], [0.6, 0.8]]}"#);
        let endpoint = ProviderEndpoint {
            expected_dim: 2,
            ..ProviderEndpoint::at(&stub.base_url)
        };
        let texts: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let m = fetch_dense_embeddings(&endpoint, &ids(3), &texts, &model(), 8, 64).unwrap();
        assert!(!m.is_fallback());
        assert_eq!(m.row(0), &[1.0, 0.0]);
        assert_eq!(m.row(1), &[0.0, 1.0]);
        assert!((m.row(2)[1] - 0.8).abs() < 1e-15);
        let log = stub.requests.lock().unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].0, "/embed");
        let body: serde_json::Value = serde_json::from_str(&log[0].1).unwrap();
        assert_eq!(body, serde_json::json!({"texts": ["a", "b", "c"]}));
    }

    #[test]
    fn provider_shape_errors() {
        let texts: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let stub = stub::serve(200, r#"{"vectors": [[1.0, 0.0], [0.0, 1.0]]}"#);
        let endpoint = ProviderEndpoint { expected_dim: 2, ..ProviderEndpoint::at(&stub.base_url) };
        assert_eq!(
            fetch_dense_embeddings(&endpoint, &ids(3), &texts, &model(), 8, 64),
            Err(EmbeddingError::Provider(ProviderError::RowCountMismatch { expected: 3, found: 2 }))
        );
        let stub = stub::serve(200, r#"{"vectors": [[1.0, 0.0], [0.0, 1.0], [1.0]]}"#);
        let endpoint = ProviderEndpoint { expected_dim: 2, ..ProviderEndpoint::at(&stub.base_url) };
        assert_eq!(
            fetch_dense_embeddings(&endpoint, &ids(3), &texts, &model(), 8, 64),
            Err(EmbeddingError::Provider(ProviderError::DimensionMismatch { row: 2, expected: 2, found: 1 }))
        );
    }

    #[test]
    fn provider_batches() {
        let stub = stub::serve(200, r#"{"vectors": [[1.0, 0.0], [0.0, 1.0]]}"#);
        let endpoint = ProviderEndpoint { expected_dim: 2, ..ProviderEndpoint::at(&stub.base_url) };
        let texts: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
        let m = fetch_dense_embeddings(&endpoint, &ids(4), &texts, &model(), 8, 2).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(stub.requests.lock().unwrap().len(), 2);
    }
}
