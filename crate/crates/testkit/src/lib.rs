//! Test support: brute-force oracles written independently of the library
//! code they check, random fixture generators, the committed fixture corpus
//! and golden-file comparison.

pub mod dense;
pub mod fixtures;
pub mod graphs;
pub mod kmeans;
pub mod metrics;
pub mod provenance;

pub use fixtures::{check_golden, fixture_path, planted_topics, synthetic_corpus};
pub use metrics::adjusted_rand_index;
