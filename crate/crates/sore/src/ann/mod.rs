//! HNSW approximate nearest-neighbor index over unit-norm vectors with
//! inner-product distance.
//!
//! The index is built once over the outlier phrase embeddings, serialized to a
//! byte dump, and loaded per document where the freshly computed core and
//! metadata embeddings are added before querying. Construction is fully
//! deterministic for a fixed seed: level assignment is a counter-based draw
//! from the seed and the point's insertion position, so `build(a ++ b)` and
//! `build(a)` followed by `add_points(b)` produce the same graph.

mod io;

pub use io::{deserialize, serialize};

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{ip_from_slices, EmbeddingVector};

#[derive(Debug, Error)]
pub enum AnnError {
    #[error("dimension mismatch: index dim {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("invalid point label: {0}")]
    InvalidLabel(&'static str),
    #[error("cannot build an index from zero points")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    OutlierPhrase,
    CoreSegment,
    Metadata,
}

/// What a stored vector stands for. `group_name` is the outlier category and
/// doubles as the removal reason; `ref_id` points back to the phrase index or
/// segment id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointLabel {
    pub kind: PointKind,
    pub group_name: Option<String>,
    pub ref_id: u64,
}

impl PointLabel {
    pub fn outlier(group_name: impl Into<String>, phrase_idx: u64) -> Self {
        Self {
            kind: PointKind::OutlierPhrase,
            group_name: Some(group_name.into()),
            ref_id: phrase_idx,
        }
    }

    pub fn core_segment(segment_id: u64) -> Self {
        Self {
            kind: PointKind::CoreSegment,
            group_name: None,
            ref_id: segment_id,
        }
    }

    pub fn metadata() -> Self {
        Self {
            kind: PointKind::Metadata,
            group_name: None,
            ref_id: 0,
        }
    }

    fn validate(&self) -> Result<(), AnnError> {
        match (self.kind, self.group_name.is_some()) {
            (PointKind::OutlierPhrase, false) => {
                Err(AnnError::InvalidLabel("outlier phrase needs a group name"))
            }
            (PointKind::CoreSegment | PointKind::Metadata, true) => {
                Err(AnnError::InvalidLabel("group name only on outlier phrases"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnParams {
    /// Max neighbors per node per layer (layer 0 allows 2M).
    pub m: usize,
    pub ef_construction: usize,
    pub seed: u64,
}

impl Default for AnnParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    vector: Vec<f32>,
    label: PointLabel,
    /// Adjacency per layer; `neighbors.len() - 1` is the node's top layer.
    neighbors: Vec<Vec<u32>>,
}

impl Node {
    fn level(&self) -> usize {
        self.neighbors.len() - 1
    }
}

#[derive(Debug, Clone)]
pub struct AnnIndex {
    dim: usize,
    params: AnnParams,
    nodes: Vec<Node>,
    entry: Option<u32>,
    max_level: usize,
}

/// Candidate ordered by (distance, insertion id): equal distances resolve to
/// the earlier-inserted point everywhere, which keeps results stable.
#[derive(Clone, Copy, PartialEq)]
struct Hit {
    dist: f32,
    id: u32,
}

impl Eq for Hit {}

impl Ord for Hit {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then_with(|| self.id.cmp(&other.id))
    }
}

impl PartialOrd for Hit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based level draw: geometric with factor 1/ln(M), independent of
/// how the point arrived (initial build or later augmentation).
fn level_for(seed: u64, point: u64, m: usize) -> usize {
    let h = splitmix64(seed ^ splitmix64(point.wrapping_add(1)));
    let u = ((h >> 11) as f64 + 1.0) / ((1u64 << 53) as f64 + 1.0);
    let m_l = 1.0 / (m.max(2) as f64).ln();
    (((-u.ln()) * m_l).floor() as usize).min(31)
}

/// Build a fresh index over `points`. Deterministic for a fixed seed.
pub fn build_index(
    points: &[(EmbeddingVector, PointLabel)],
    params: AnnParams,
) -> Result<AnnIndex, AnnError> {
    let dim = points.first().ok_or(AnnError::Empty)?.0.dim();
    let mut index = AnnIndex {
        dim,
        params,
        nodes: Vec::with_capacity(points.len()),
        entry: None,
        max_level: 0,
    };
    index.insert_all(points)?;
    Ok(index)
}

/// Exhaustive top-k scan. Test oracle for `AnnIndex::search`; same ordering
/// contract (ascending distance, ties by position).
pub fn exact_search(
    points: &[(EmbeddingVector, PointLabel)],
    query: &EmbeddingVector,
    k: usize,
) -> Result<Vec<(PointLabel, f32)>, AnnError> {
    let mut hits: Vec<Hit> = Vec::with_capacity(points.len());
    for (i, (v, _)) in points.iter().enumerate() {
        if v.dim() != query.dim() {
            return Err(AnnError::DimensionMismatch {
                expected: query.dim(),
                got: v.dim(),
            });
        }
        hits.push(Hit {
            dist: ip_from_slices(query.as_slice(), v.as_slice()),
            id: i as u32,
        });
    }
    hits.sort_unstable();
    hits.truncate(k);
    Ok(hits
        .into_iter()
        .map(|h| (points[h.id as usize].1.clone(), h.dist))
        .collect())
}

impl AnnIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn params(&self) -> AnnParams {
        self.params
    }

    pub fn entry_point(&self) -> Option<u32> {
        self.entry
    }

    /// Stored points in insertion order.
    pub fn points(&self) -> impl Iterator<Item = (&PointLabel, &[f32])> {
        self.nodes.iter().map(|n| (&n.label, n.vector.as_slice()))
    }

    /// Count of stored points whose label matches `pred`.
    pub fn count_matching(&self, pred: impl Fn(&PointLabel) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.label)).count()
    }

    /// Exhaustive nearest point among those whose label matches `pred`.
    /// Used as a correctness backstop when a graph walk misses a population.
    pub fn nearest_matching(
        &self,
        query: &EmbeddingVector,
        pred: impl Fn(&PointLabel) -> bool,
    ) -> Result<Option<(PointLabel, f32)>, AnnError> {
        self.check_dim(query)?;
        let mut best: Option<Hit> = None;
        for (i, node) in self.nodes.iter().enumerate() {
            if !pred(&node.label) {
                continue;
            }
            let h = Hit {
                dist: ip_from_slices(query.as_slice(), &node.vector),
                id: i as u32,
            };
            if best.map_or(true, |b| h < b) {
                best = Some(h);
            }
        }
        Ok(best.map(|h| (self.nodes[h.id as usize].label.clone(), h.dist)))
    }

    /// Augmented copy with `points` appended. The receiver is untouched, so a
    /// shared prebuilt index can serve many documents concurrently.
    pub fn add_points(
        &self,
        points: &[(EmbeddingVector, PointLabel)],
    ) -> Result<AnnIndex, AnnError> {
        let mut out = self.clone();
        out.insert_all(points)?;
        Ok(out)
    }

    fn insert_all(&mut self, points: &[(EmbeddingVector, PointLabel)]) -> Result<(), AnnError> {
        for (vector, label) in points {
            if vector.dim() != self.dim {
                return Err(AnnError::DimensionMismatch {
                    expected: self.dim,
                    got: vector.dim(),
                });
            }
            label.validate()?;
            self.insert(vector.as_slice().to_vec(), label.clone());
        }
        Ok(())
    }

    fn insert(&mut self, vector: Vec<f32>, label: PointLabel) {
        let id = self.nodes.len() as u32;
        let level = level_for(self.params.seed, u64::from(id), self.params.m);

        if self.nodes.is_empty() {
            self.nodes.push(Node {
                vector,
                label,
                neighbors: vec![Vec::new(); level + 1],
            });
            self.entry = Some(0);
            self.max_level = level;
            return;
        }

        let mut ep = vec![self.entry.expect("non-empty index has an entry point")];
        for layer in (level + 1..=self.max_level).rev() {
            let w = self.search_layer(&vector, &ep, 1, layer);
            ep = vec![w[0].id];
        }

        let top = level.min(self.max_level);
        let mut links: Vec<(usize, Vec<u32>)> = Vec::new();
        for layer in (0..=top).rev() {
            let w = self.search_layer(&vector, &ep, self.params.ef_construction, layer);
            let selected: Vec<u32> = w.iter().take(self.params.m).map(|h| h.id).collect();
            ep = w.iter().map(|h| h.id).collect();
            links.push((layer, selected));
        }

        self.nodes.push(Node {
            vector,
            label,
            neighbors: vec![Vec::new(); level + 1],
        });
        for (layer, selected) in links {
            let cap = self.layer_cap(layer);
            for &nb in &selected {
                self.nodes[nb as usize].neighbors[layer].push(id);
                if self.nodes[nb as usize].neighbors[layer].len() > cap {
                    self.prune(nb, layer, cap);
                }
            }
            self.nodes[id as usize].neighbors[layer] = selected;
        }

        if level > self.max_level {
            self.max_level = level;
            self.entry = Some(id);
        }
    }

    fn layer_cap(&self, layer: usize) -> usize {
        if layer == 0 {
            self.params.m * 2
        } else {
            self.params.m
        }
    }

    /// Shrink an over-full neighbor list back to `cap`, keeping the closest.
    fn prune(&mut self, node: u32, layer: usize, cap: usize) {
        let base = self.nodes[node as usize].vector.clone();
        let mut hits: Vec<Hit> = self.nodes[node as usize].neighbors[layer]
            .iter()
            .map(|&nb| Hit {
                dist: ip_from_slices(&base, &self.nodes[nb as usize].vector),
                id: nb,
            })
            .collect();
        hits.sort_unstable();
        hits.truncate(cap);
        self.nodes[node as usize].neighbors[layer] = hits.into_iter().map(|h| h.id).collect();
    }

    /// Greedy beam search within one layer. Returns up to `ef` hits sorted
    /// ascending by (distance, id).
    fn search_layer(&self, query: &[f32], entry: &[u32], ef: usize, layer: usize) -> Vec<Hit> {
        let mut visited = vec![false; self.nodes.len()];
        let mut candidates: BinaryHeap<Reverse<Hit>> = BinaryHeap::new();
        let mut results: BinaryHeap<Hit> = BinaryHeap::new();

        for &ep in entry {
            if visited[ep as usize] {
                continue;
            }
            visited[ep as usize] = true;
            let h = Hit {
                dist: ip_from_slices(query, &self.nodes[ep as usize].vector),
                id: ep,
            };
            candidates.push(Reverse(h));
            results.push(h);
        }
        while results.len() > ef {
            results.pop();
        }

        while let Some(Reverse(current)) = candidates.pop() {
            if results.len() >= ef {
                if let Some(worst) = results.peek() {
                    if current.dist > worst.dist {
                        break;
                    }
                }
            }
            let neighbors = &self.nodes[current.id as usize].neighbors;
            if layer >= neighbors.len() {
                continue;
            }
            for &nb in &neighbors[layer] {
                if visited[nb as usize] {
                    continue;
                }
                visited[nb as usize] = true;
                let h = Hit {
                    dist: ip_from_slices(query, &self.nodes[nb as usize].vector),
                    id: nb,
                };
                if results.len() < ef || h < *results.peek().expect("results non-empty") {
                    candidates.push(Reverse(h));
                    results.push(h);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        results.into_sorted_vec()
    }

    /// Top-k nearest stored points by inner-product distance, ascending, ties
    /// by insertion order. `ef_search` is clamped up to `k`.
    pub fn search(
        &self,
        query: &EmbeddingVector,
        k: usize,
        ef_search: usize,
    ) -> Result<Vec<(PointLabel, f32)>, AnnError> {
        self.check_dim(query)?;
        if self.nodes.is_empty() || k == 0 {
            return Ok(Vec::new());
        }
        let ef = ef_search.max(k);
        let mut ep = vec![self.entry.expect("non-empty index has an entry point")];
        for layer in (1..=self.max_level).rev() {
            let w = self.search_layer(query.as_slice(), &ep, 1, layer);
            ep = vec![w[0].id];
        }
        let mut hits = self.search_layer(query.as_slice(), &ep, ef, 0);
        hits.truncate(k);
        Ok(hits
            .into_iter()
            .map(|h| (self.nodes[h.id as usize].label.clone(), h.dist))
            .collect())
    }

    fn check_dim(&self, query: &EmbeddingVector) -> Result<(), AnnError> {
        if query.dim() != self.dim {
            return Err(AnnError::DimensionMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        Ok(())
    }
}
