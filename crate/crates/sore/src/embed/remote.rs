//! Generic remote embedding client.
//!
//! Wire format: `POST endpoint` with `{"texts": [...], "dim": N}`, response
//! `{"vectors": [[...], ...]}`. Vendor-specific adapters live outside this
//! crate; anything that speaks this shape works.

use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingProvider};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
    dim: usize,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

pub struct RemoteProvider {
    client: reqwest::blocking::Client,
    endpoint: String,
    auth: Option<String>,
    dim: usize,
}

impl RemoteProvider {
    pub fn new(
        endpoint: String,
        auth: Option<String>,
        dim: usize,
        timeout_ms: u64,
    ) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_millis(timeout_ms))
            .build()
            .map_err(|e| EmbedError::InvalidConfig(format!("http client: {e}")))?;
        Ok(Self {
            client,
            endpoint,
            auth,
            dim,
        })
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn embed_chunk(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let mut req = self.client.post(&self.endpoint).json(&EmbedRequest {
            texts,
            dim: self.dim,
        });
        if let Some(token) = &self.auth {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(EmbedError::ProviderUnavailable(format!(
                "endpoint returned {status}"
            )));
        }
        let body: EmbedResponse = resp
            .json()
            .map_err(|e| EmbedError::ProviderUnavailable(format!("bad response body: {e}")))?;
        for v in &body.vectors {
            if v.len() != self.dim {
                return Err(EmbedError::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                });
            }
        }
        Ok(body.vectors)
    }
}
