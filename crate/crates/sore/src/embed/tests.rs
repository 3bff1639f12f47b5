use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use super::*;

fn texts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("sample text number {i}")).collect()
}

struct CountingProvider {
    dim: usize,
    sizes: Arc<Mutex<Vec<usize>>>,
}

impl EmbeddingProvider for CountingProvider {
    fn embed_chunk(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        self.sizes.lock().unwrap().push(texts.len());
        Ok(texts
            .iter()
            .map(|_| {
                let mut v = vec![0.0f32; self.dim];
                v[0] = 1.0;
                v
            })
            .collect())
    }
}

#[test]
fn batching_splits_96_96_8() {
    let sizes = Arc::new(Mutex::new(Vec::new()));
    let embedder = Embedder::with_provider(
        Box::new(CountingProvider {
            dim: 32,
            sizes: sizes.clone(),
        }),
        EmbedderConfig {
            dim: 32,
            batch_size: 96,
            ..EmbedderConfig::default()
        },
    );
    let out = embedder.embed_texts(&texts(200)).unwrap();
    assert_eq!(out.len(), 200);
    assert_eq!(*sizes.lock().unwrap(), vec![96, 96, 8]);
}

#[test]
fn hashing_is_deterministic() {
    let cfg = EmbedderConfig::default();
    let embedder = Embedder::from_config(cfg.clone()).unwrap();
    let input = texts(20);
    let a = embedder.embed_texts(&input).unwrap();
    let b = embedder.embed_texts(&input).unwrap();
    assert_eq!(a, b);
    // And identical to the single-text path, bit for bit.
    for (vec, text) in a.iter().zip(&input) {
        assert_eq!(vec, &hash_embed(text, cfg.dim, cfg.hashing_seed).unwrap());
    }
}

#[test]
fn batching_never_changes_results() {
    let input = texts(37);
    let mut reference = None;
    for batch_size in [1, 2, 5, 16, 37, 100] {
        let embedder = Embedder::from_config(EmbedderConfig {
            batch_size,
            ..EmbedderConfig::default()
        })
        .unwrap();
        let out = embedder.embed_texts(&input).unwrap();
        match &reference {
            None => reference = Some(out),
            Some(r) => assert_eq!(&out, r, "batch_size {batch_size} changed output"),
        }
    }
}

#[test]
fn hash_embed_aaaa_has_at_most_two_buckets() {
    let v = hash_embed("aaaa", 64, 0).unwrap();
    let nonzero = v.as_slice().iter().filter(|&&x| x != 0.0).count();
    assert!(nonzero >= 1 && nonzero <= 2, "nonzero buckets: {nonzero}");
    let norm: f32 = v.as_slice().iter().map(|x| x * x).sum::<f32>().sqrt();
    assert!((norm - 1.0).abs() < 1e-5);
}

#[test]
fn hash_embed_rejects_short_text() {
    match hash_embed("ab", 64, 0) {
        Err(EmbedError::TextTooShort { chars: 2 }) => {}
        other => panic!("expected TextTooShort, got {other:?}"),
    }
}

#[test]
fn near_duplicates_rank_above_unrelated_text() {
    let a = hash_embed("Subscribe to our newsletter", 256, 0).unwrap();
    let b = hash_embed("Subscribe to the newsletter", 256, 0).unwrap();
    let c = hash_embed("Protein folding kinetics", 256, 0).unwrap();
    let cos_ab = a.dot(&b);
    let cos_ac = a.dot(&c);
    assert!(
        cos_ab > cos_ac,
        "expected near-duplicate similarity {cos_ab} > unrelated {cos_ac}"
    );
}

#[test]
fn seed_changes_the_vector() {
    let a = hash_embed("Leave a comment", 128, 0).unwrap();
    let b = hash_embed("Leave a comment", 128, 1).unwrap();
    assert_ne!(a, b);
}

#[test]
fn ip_distance_identity_orthogonal_antipodal() {
    let e1 = EmbeddingVector::unit(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let e2 = EmbeddingVector::unit(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
    let neg = EmbeddingVector::unit(vec![-1.0, 0.0, 0.0, 0.0]).unwrap();
    assert_eq!(ip_distance(&e1, &e1).unwrap(), 0.0);
    assert_eq!(ip_distance(&e1, &e2).unwrap(), 1.0);
    assert_eq!(ip_distance(&e1, &neg).unwrap(), 2.0);
    assert!(matches!(
        ip_distance(&e1, &EmbeddingVector::unit(vec![1.0, 1.0]).unwrap()),
        Err(EmbedError::DimensionMismatch { .. })
    ));
}

#[test]
fn ip_distance_matches_cosine_distance() {
    // 1 - dot == 1 - cos for unit vectors; check against an f64 recomputation.
    let mut state = 0x243f_6a88_85a3_08d3u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..200 {
        let a: Vec<f32> = (0..48).map(|_| (next() - 0.5) as f32).collect();
        let b: Vec<f32> = (0..48).map(|_| (next() - 0.5) as f32).collect();
        let va = EmbeddingVector::unit(a).unwrap();
        let vb = EmbeddingVector::unit(b).unwrap();
        let ip = f64::from(ip_distance(&va, &vb).unwrap());
        let dot64: f64 = va
            .as_slice()
            .iter()
            .zip(vb.as_slice())
            .map(|(&x, &y)| f64::from(x) * f64::from(y))
            .sum();
        let na: f64 = va.as_slice().iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = vb.as_slice().iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
        let cos_dist = 1.0 - dot64 / (na * nb);
        assert!(
            (ip - cos_dist.max(0.0)).abs() <= 1e-6,
            "ip {ip} vs cosine {cos_dist}"
        );
    }
}

#[test]
fn all_outputs_satisfy_vector_invariants() {
    let embedder = Embedder::from_config(EmbedderConfig::default()).unwrap();
    for v in embedder.embed_texts(&texts(50)).unwrap() {
        let norm: f64 = v.as_slice().iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-5);
        assert!(v.as_slice().iter().all(|x| x.is_finite()));
    }
}

#[test]
fn zero_vector_is_rejected() {
    assert!(matches!(
        EmbeddingVector::unit(vec![0.0; 8]),
        Err(EmbedError::ZeroVector)
    ));
    assert!(matches!(
        EmbeddingVector::unit(vec![f32::NAN, 1.0]),
        Err(EmbedError::NonFinite)
    ));
}

// -- remote provider against a local stub --------------------------------

/// Minimal HTTP stub: answers each connection with the payload produced by
/// `respond(request_index, body)`.
fn spawn_stub<F>(n_requests: usize, respond: F) -> String
where
    F: Fn(usize, &str) -> (u16, String) + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for i in 0..n_requests {
            let (mut stream, _) = match listener.accept() {
                Ok(s) => s,
                Err(_) => return,
            };
            let mut buf = Vec::new();
            let mut tmp = [0u8; 4096];
            let body = loop {
                let n = stream.read(&mut tmp).unwrap_or(0);
                if n == 0 {
                    break String::new();
                }
                buf.extend_from_slice(&tmp[..n]);
                if let Some(pos) = find_header_end(&buf) {
                    let headers = String::from_utf8_lossy(&buf[..pos]).to_string();
                    let len = content_length(&headers);
                    while buf.len() < pos + len {
                        let n = stream.read(&mut tmp).unwrap_or(0);
                        if n == 0 {
                            break;
                        }
                        buf.extend_from_slice(&tmp[..n]);
                    }
                    break String::from_utf8_lossy(&buf[pos..pos + len]).to_string();
                }
            };
            let (status, payload) = respond(i, &body);
            let reason = if status == 200 { "OK" } else { "ERR" };
            let resp = format!(
                "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    format!("http://{addr}/v1/embed")
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n").map(|p| p + 4)
}

fn content_length(headers: &str) -> usize {
    headers
        .lines()
        .find_map(|l| {
            let (k, v) = l.split_once(':')?;
            k.eq_ignore_ascii_case("content-length")
                .then(|| v.trim().parse().ok())?
        })
        .unwrap_or(0)
}

fn remote_config(endpoint: String, dim: usize) -> EmbedderConfig {
    EmbedderConfig {
        provider: ProviderKind::Remote,
        dim,
        remote_endpoint: Some(endpoint),
        max_retries: 2,
        timeout_ms: 5_000,
        ..EmbedderConfig::default()
    }
}

#[test]
fn remote_provider_returns_normalized_stub_vectors() {
    let endpoint = spawn_stub(1, |_, body| {
        let req: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(req["dim"], 4);
        let n = req["texts"].as_array().unwrap().len();
        let vectors: Vec<Vec<f32>> = (0..n).map(|i| vec![2.0 + i as f32, 0.0, 0.0, 0.0]).collect();
        (200, serde_json::json!({ "vectors": vectors }).to_string())
    });
    let embedder = Embedder::from_config(remote_config(endpoint, 4)).unwrap();
    let out = embedder
        .embed_texts(&vec!["alpha".to_string(), "beta".to_string()])
        .unwrap();
    assert_eq!(out.len(), 2);
    for v in &out {
        assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }
}

#[test]
fn remote_provider_retries_then_succeeds() {
    let hits = Arc::new(AtomicUsize::new(0));
    let hits2 = hits.clone();
    let endpoint = spawn_stub(2, move |i, _| {
        hits2.fetch_add(1, Ordering::SeqCst);
        if i == 0 {
            (503, "{\"error\":\"warming up\"}".to_string())
        } else {
            (200, serde_json::json!({ "vectors": [[1.0, 0.0, 0.0, 0.0]] }).to_string())
        }
    });
    let embedder = Embedder::from_config(remote_config(endpoint, 4)).unwrap();
    let out = embedder.embed_texts(&vec!["gamma".to_string()]).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[test]
fn remote_provider_exhausts_retries() {
    let endpoint = spawn_stub(3, |_, _| (503, "{}".to_string()));
    let embedder = Embedder::from_config(remote_config(endpoint, 4)).unwrap();
    match embedder.embed_texts(&vec!["delta".to_string()]) {
        Err(EmbedError::ProviderUnavailable(_)) => {}
        other => panic!("expected ProviderUnavailable, got {other:?}"),
    }
}

#[test]
fn remote_provider_rejects_wrong_dim() {
    let endpoint = spawn_stub(1, |_, _| {
        (200, serde_json::json!({ "vectors": [[1.0, 0.0]] }).to_string())
    });
    let embedder = Embedder::from_config(remote_config(endpoint, 4)).unwrap();
    match embedder.embed_texts(&vec!["epsilon".to_string()]) {
        Err(EmbedError::DimensionMismatch { expected: 4, got: 2 }) => {}
        other => panic!("expected DimensionMismatch, got {other:?}"),
    }
}
