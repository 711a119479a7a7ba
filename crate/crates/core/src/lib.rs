//! Idea-flow machine reading over a local citation corpus.
//!
//! Given a target paper, the pipeline expands its multi-hop references and
//! citations, keeps the PageRank-strongest candidates on each side, embeds
//! them into a shared vector space (TF-IDF fused with an optional dense
//! provider, then smoothed over the citation graph), clusters each side into
//! topics with kernel k-means, ranks papers inside each topic by relevance to
//! the target and writes a short survey card per topic. The cards and a
//! tracing-and-evolution tree are serialized into a canonical result document
//! and a printable HTML report.
//!
//! The numeric stages are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common case. The pipeline itself runs
//! in `f64`.

pub mod clustering;
pub mod corpus;
pub mod embedding;
pub mod graph;
pub mod pipeline;
pub mod provider;
pub mod relevance;
pub mod scalar;
pub mod survey;
pub mod synthetic;
pub mod text;
pub mod tree;

pub use clustering::{ClusterAssignment, ClusterError, KernelKind, KernelMatrix};
pub use corpus::{CorpusError, CorpusStore, IngestionStats, PaperRecord};
pub use embedding::{EmbeddingError, EmbeddingMatrix, SparseVector, Stage, TfidfModel};
pub use graph::{CandidateSet, CitationGraph, Direction, ExpandedSet, GraphError};
pub use pipeline::{MachineReadingResult, PipelineConfig, PipelineError};
pub use provider::{ProviderEndpoint, ProviderError};
pub use relevance::{RankedCluster, RelevanceScore};
pub use scalar::Scalar;
pub use survey::{SentenceVerdict, SurveyCard};
pub use tree::{EvolutionTree, ResultDocument, TopicNode};

pub type CandidateSet64 = CandidateSet<f64>;
pub type CandidateSet32 = CandidateSet<f32>;
pub type TfidfModel64 = TfidfModel<f64>;
pub type TfidfModel32 = TfidfModel<f32>;
pub type SparseVector64 = SparseVector<f64>;
pub type SparseVector32 = SparseVector<f32>;
pub type EmbeddingMatrix64 = EmbeddingMatrix<f64>;
pub type EmbeddingMatrix32 = EmbeddingMatrix<f32>;
pub type KernelMatrix64 = KernelMatrix<f64>;
pub type KernelMatrix32 = KernelMatrix<f32>;
pub type ClusterAssignment64 = ClusterAssignment<f64>;
pub type ClusterAssignment32 = ClusterAssignment<f32>;
pub type RelevanceScore64 = RelevanceScore<f64>;
pub type RelevanceScore32 = RelevanceScore<f32>;
pub type RankedCluster64 = RankedCluster<f64>;
pub type RankedCluster32 = RankedCluster<f32>;
