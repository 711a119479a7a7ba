use std::collections::BTreeMap;

use crate::scalar::Scalar;
use crate::text::tokenize;

use super::EmbeddingError;

/// Smoothed TF-IDF: `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, raw term
/// counts, L2-normalized rows. Vocabulary indices follow sorted token order.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel<T> {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<T>,
    document_count: usize,
}

impl<T: Scalar> TfidfModel<T> {
    pub fn fit<S: AsRef<str>>(documents: &[S]) -> Result<Self, EmbeddingError> {
        if documents.is_empty() {
            return Err(EmbeddingError::NoDocuments);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in documents {
            let mut tokens = tokenize(doc.as_ref());
            tokens.sort_unstable();
            tokens.dedup();
            for t in tokens {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(EmbeddingError::EmptyVocabulary);
        }
        let n = documents.len();
        let idf = df.values().map(|&d| smoothed_idf(n, d)).collect();
        let vocabulary = df.into_keys().enumerate().map(|(i, t)| (t, i)).collect();
        Ok(Self {
            vocabulary,
            idf,
            document_count: n,
        })
    }

    pub fn vocabulary_size(&self) -> usize {
        self.idf.len()
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.vocabulary.get(token).copied()
    }

    pub fn idf(&self, token: &str) -> Option<T> {
        self.index_of(token).map(|i| self.idf[i])
    }

    /// The idf a token would have with document frequency zero.
    pub fn unseen_idf(&self) -> T {
        smoothed_idf(self.document_count, 0)
    }

    pub fn idf_or_unseen(&self, token: &str) -> T {
        self.idf(token).unwrap_or_else(|| self.unseen_idf())
    }

    /// Raw count × idf per in-vocabulary token, L2-normalized. Documents with
    /// no in-vocabulary tokens give the zero vector.
    pub fn embed(&self, document: &str) -> SparseVector<T> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in tokenize(document) {
            if let Some(i) = self.index_of(&t) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let mut entries: Vec<(usize, T)> = counts
            .into_iter()
            .map(|(i, c)| (i, T::from_usize_lossy(c) * self.idf[i]))
            .collect();
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<T>().sqrt();
        if norm > T::zero() {
            entries.iter_mut().for_each(|(_, w)| *w = *w / norm);
        }
        SparseVector {
            entries,
            dim: self.vocabulary_size(),
        }
    }
}

fn smoothed_idf<T: Scalar>(n: usize, df: usize) -> T {
    let ratio = T::from_usize_lossy(1 + n) / T::from_usize_lossy(1 + df);
    ratio.ln() + T::one()
}

/// Sparse row: `(column, weight)` pairs in ascending column order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<T> {
    pub entries: Vec<(usize, T)>,
    pub dim: usize,
}

impl<T: Scalar> SparseVector<T> {
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, w)| w == T::zero())
    }

    pub fn dot(&self, other: &Self) -> T {
        let (mut i, mut j) = (0, 0);
        let mut acc = T::zero();
        while i < self.entries.len() && j < other.entries.len() {
            let (a, wa) = self.entries[i];
            let (b, wb) = other.entries[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc = acc + wa * wb;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idf_closed_form() {
        let m = TfidfModel::<f64>::fit(&["graph graph model", "model"]).unwrap();
        assert!((m.idf("graph").unwrap() - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-15);
        assert!((m.idf("graph").unwrap() - 1.405_465).abs() < 1e-6);
        assert_eq!(m.idf("model").unwrap(), 1.0);
        assert_eq!(m.index_of("graph"), Some(0));
        assert_eq!(m.index_of("model"), Some(1));
    }

    #[test]
    fn single_document_has_unit_idf() {
        let m = TfidfModel::<f32>::fit(&["kernel methods scale"]).unwrap();
        for t in ["kernel", "methods", "scale"] {
            assert_eq!(m.idf(t), Some(1.0));
        }
    }

    #[test]
    fn fit_errors() {
        assert_eq!(TfidfModel::<f64>::fit::<&str>(&[]), Err(EmbeddingError::NoDocuments));
        assert_eq!(
            TfidfModel::<f64>::fit(&["the a of", ""]),
            Err(EmbeddingError::EmptyVocabulary)
        );
    }

    #[test]
    fn embed_weights() {
        let m = TfidfModel::<f64>::fit(&["graph graph model", "model"]).unwrap();
        let v = m.embed("graph graph model");
        let pre = [2.0 * m.idf("graph").unwrap(), 1.0];
        let norm = (pre[0] * pre[0] + pre[1] * pre[1]).sqrt();
        assert!((pre[0] - 2.8109).abs() < 1e-4);
        assert!((v.entries[0].1 - pre[0] / norm).abs() < 1e-12);
        assert!((v.entries[0].1 - 0.9422).abs() < 1e-4);
        assert!((v.entries[1].1 - 0.3351).abs() < 1e-4);
        assert_eq!(v, m.embed("graph graph model"));
        assert!(m.embed("unknown words only").is_zero());
        assert!(m.embed("").entries.is_empty());
    }

    #[test]
    fn sparse_dot_matches_dense() {
        let a = SparseVector { entries: vec![(0, 1.0), (3, 2.0)], dim: 5 };
        let b = SparseVector { entries: vec![(1, 4.0), (3, 0.5), (4, 1.0)], dim: 5 };
        let dense: f64 = a.to_dense().iter().zip(b.to_dense()).map(|(x, y)| x * y).sum();
        assert_eq!(a.dot(&b), dense);
    }
}
