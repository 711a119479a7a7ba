//! JSON-over-HTTP clients for the optional model providers (dense text
//! embeddings, abstractive summarizer, OBJECTIVE-sentence classifier).
//!
//! Every endpoint is optional. An endpoint without a base URL puts its stage
//! into the deterministic fallback path.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("provider endpoint is not configured")]
    NotConfigured,
    #[error("provider network failure: {0}")]
    Network(String),
    #[error("provider timed out")]
    Timeout,
    #[error("provider answered with status {0}")]
    Status(u16),
    #[error("provider response is malformed: {0}")]
    Malformed(String),
    #[error("provider vector {row} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("provider returned {found} rows for {expected} inputs")]
    RowCountMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderEndpoint {
    pub base_url: Option<String>,
    pub timeout: Duration,
    /// Only meaningful for embedding providers.
    pub expected_dim: usize,
}

impl Default for ProviderEndpoint {
    fn default() -> Self {
        Self::absent()
    }
}

impl ProviderEndpoint {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
    pub const DEFAULT_DIM: usize = 384;

    pub fn absent() -> Self {
        Self {
            base_url: None,
            timeout: Self::DEFAULT_TIMEOUT,
            expected_dim: Self::DEFAULT_DIM,
        }
    }

    pub fn at(base_url: impl Into<String>) -> Self {
        Self {
            base_url: Some(base_url.into()),
            ..Self::absent()
        }
    }

    pub fn is_configured(&self) -> bool {
        self.base_url.is_some()
    }

    pub(crate) fn post_json<Req, Resp>(&self, path: &str, body: &Req) -> Result<Resp, ProviderError>
    where
        Req: Serialize + ?Sized,
        Resp: DeserializeOwned,
    {
        let base = self.base_url.as_deref().ok_or(ProviderError::NotConfigured)?;
        let url = format!("{}/{}", base.trim_end_matches('/'), path);
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut response = agent.post(&url).send_json(body).map_err(map_transport)?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(ProviderError::Status(status));
        }
        response.body_mut().read_json::<Resp>().map_err(|e| match e {
            ureq::Error::Timeout(_) => ProviderError::Timeout,
            other => ProviderError::Malformed(other.to_string()),
        })
    }
}

fn map_transport(err: ureq::Error) -> ProviderError {
    match err {
        ureq::Error::Timeout(_) => ProviderError::Timeout,
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => ProviderError::Timeout,
        other => ProviderError::Network(other.to_string()),
    }
}

#[derive(Serialize)]
pub(crate) struct EmbedRequest<'a> {
    pub texts: &'a [String],
}

#[derive(Deserialize)]
pub(crate) struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub(crate) struct SummarizeRequest<'a> {
    pub documents: &'a [String],
}

#[derive(Deserialize)]
pub(crate) struct SummarizeResponse {
    pub summary: String,
}

#[derive(Serialize)]
pub(crate) struct ClassifyRequest<'a> {
    pub sentences: &'a [String],
}

#[derive(Deserialize)]
pub(crate) struct ClassifyResponse {
    pub labels: Vec<bool>,
}
