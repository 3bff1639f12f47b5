//! Embedding providers and vector primitives.
//!
//! Two providers share one interface: a deterministic feature-hashing embedder
//! (offline, used by tests and the default CLI path) and a generic remote HTTP
//! embedder. Both normalize their output, so downstream code can always use
//! inner-product distance.

mod hashing;
mod remote;

pub use hashing::hash_embed;
pub use remote::RemoteProvider;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Env var that overrides `EmbedderConfig::remote_endpoint`.
pub const ENDPOINT_ENV: &str = "SORE_EMBED_ENDPOINT";

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("text too short to embed ({chars} chars, need at least 3)")]
    TextTooShort { chars: usize },
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedding has zero norm")]
    ZeroVector,
    #[error("embedding contains non-finite components")]
    NonFinite,
    #[error("invalid embedder config: {0}")]
    InvalidConfig(String),
}

impl EmbedError {
    fn is_retryable(&self) -> bool {
        matches!(self, EmbedError::ProviderUnavailable(_))
    }
}

/// Unit-norm dense vector of f32 components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    /// Normalize `values` to unit L2 norm. Rejects non-finite components and
    /// the zero vector.
    pub fn unit(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        let norm = (values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>()).sqrt();
        if norm == 0.0 {
            return Err(EmbedError::ZeroVector);
        }
        let inv = (1.0 / norm) as f32;
        Ok(Self {
            values: values.into_iter().map(|v| v * inv).collect(),
        })
    }

    /// Wrap values that are already unit-norm (e.g. read back from a
    /// serialized index). Only the invariants are checked; no renormalization.
    pub fn from_unit(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        let norm = (values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>()).sqrt();
        if (norm - 1.0).abs() > 1e-4 {
            return Err(EmbedError::ZeroVector);
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn dot(&self, other: &Self) -> f32 {
        dot(&self.values, &other.values)
    }
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Inner-product distance, `1 - dot(a, b)`. For unit vectors this equals
/// cosine distance and lies in `[0, 2]`; float rounding below zero is clamped.
pub fn ip_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f32, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(ip_from_slices(a.as_slice(), b.as_slice()))
}

pub(crate) fn ip_from_slices(a: &[f32], b: &[f32]) -> f32 {
    (1.0 - dot(a, b)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Hashing,
    Remote,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub provider: ProviderKind,
    pub dim: usize,
    pub batch_size: usize,
    pub hashing_seed: u64,
    pub remote_endpoint: Option<String>,
    pub remote_auth: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Hashing,
            dim: 256,
            batch_size: 96,
            hashing_seed: 0,
            remote_endpoint: None,
            remote_auth: None,
            timeout_ms: 10_000,
            max_retries: 3,
        }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::InvalidConfig("dim must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(EmbedError::InvalidConfig("batch_size must be > 0".into()));
        }
        if self.provider == ProviderKind::Hashing && self.dim < 16 {
            return Err(EmbedError::InvalidConfig(
                "hashing provider needs dim >= 16".into(),
            ));
        }
        Ok(())
    }

    /// Endpoint after applying the `SORE_EMBED_ENDPOINT` override.
    pub fn resolved_endpoint(&self) -> Option<String> {
        std::env::var(ENDPOINT_ENV)
            .ok()
            .filter(|v| !v.is_empty())
            .or_else(|| self.remote_endpoint.clone())
    }
}

/// One provider call. Returns raw (possibly unnormalized) vectors, one per
/// input text. `Embedder` handles batching, retries and normalization.
pub trait EmbeddingProvider: Send + Sync {
    fn embed_chunk(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError>;
}

struct HashingProvider {
    dim: usize,
    seed: u64,
}

impl EmbeddingProvider for HashingProvider {
    fn embed_chunk(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        texts
            .iter()
            .map(|t| hashing::hash_accumulate(t, self.dim, self.seed))
            .collect()
    }
}

/// Batch embedding front door shared by the pipeline, the CLI, and the service.
pub struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    config: EmbedderConfig,
}

impl Embedder {
    pub fn from_config(config: EmbedderConfig) -> Result<Self, EmbedError> {
        config.validate()?;
        let provider: Box<dyn EmbeddingProvider> = match config.provider {
            ProviderKind::Hashing => Box::new(HashingProvider {
                dim: config.dim,
                seed: config.hashing_seed,
            }),
            ProviderKind::Remote => {
                let endpoint = config.resolved_endpoint().ok_or_else(|| {
                    EmbedError::InvalidConfig(
                        "remote provider requires an endpoint (flag, config, or SORE_EMBED_ENDPOINT)"
                            .into(),
                    )
                })?;
                Box::new(RemoteProvider::new(
                    endpoint,
                    config.remote_auth.clone(),
                    config.dim,
                    config.timeout_ms,
                )?)
            }
        };
        Ok(Self { provider, config })
    }

    /// Build around a custom provider. Used by tests to count calls and to
    /// inject canned vectors.
    pub fn with_provider(provider: Box<dyn EmbeddingProvider>, config: EmbedderConfig) -> Self {
        Self { provider, config }
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn config(&self) -> &EmbedderConfig {
        &self.config
    }

    /// Embed `texts` in order, splitting into `batch_size` chunks. Retryable
    /// provider failures back off exponentially up to `max_retries`.
    pub fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.config.batch_size.max(1)) {
            let raw = self.call_with_retries(chunk)?;
            if raw.len() != chunk.len() {
                return Err(EmbedError::ProviderUnavailable(format!(
                    "provider returned {} vectors for {} texts",
                    raw.len(),
                    chunk.len()
                )));
            }
            for values in raw {
                if values.len() != self.config.dim {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.config.dim,
                        got: values.len(),
                    });
                }
                out.push(EmbeddingVector::unit(values)?);
            }
        }
        Ok(out)
    }

    fn call_with_retries(&self, chunk: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let mut attempt = 0u32;
        let mut backoff_ms = 100u64;
        loop {
            match self.provider.embed_chunk(chunk) {
                Ok(raw) => return Ok(raw),
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    attempt += 1;
                    std::thread::sleep(std::time::Duration::from_millis(backoff_ms));
                    backoff_ms = (backoff_ms * 2).min(5_000);
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Seeded uniform random unit vectors (gaussian components, normalized).
/// Deterministic; used by index benchmarks and the test suite.
pub fn random_unit_vectors(n: usize, dim: usize, seed: u64) -> Vec<EmbeddingVector> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            loop {
                let values: Vec<f32> = (0..dim)
                    .map(|_| {
                        // Box-Muller from two uniform draws.
                        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                        let u2: f64 = rng.gen_range(0.0..1.0);
                        ((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()) as f32
                    })
                    .collect();
                if let Ok(v) = EmbeddingVector::unit(values) {
                    return v;
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests;
