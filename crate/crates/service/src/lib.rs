//! Command-line tool and HTTP service around the machine-reading pipeline.

pub mod cache;
pub mod cli;
pub mod http;

pub use cache::{CacheKey, CachedResult, ResultCache};
pub use http::{router, AppState, BackgroundServer};
