//! The cleaning pipeline: select core content by metadata similarity, then
//! classify every remaining segment against the core anchors and the outlier
//! lexicon.
//!
//! A [`Pipeline`] owns the embedder, the prebuilt outlier index, and the
//! phrase table. It is immutable after construction and safe to share across
//! worker threads; each document gets its own augmented copy of the index, so
//! no per-document state ever touches the shared one.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ann::{self, AnnIndex, AnnParams, PointKind, PointLabel};
use crate::embed::{Embedder, EmbedderConfig, EmbeddingVector};
use crate::groups::{flatten_phrases, OutlierGroup};
use crate::segmenter::{parse_document, DocumentMetadata, Segment, SegmenterConfig};

#[derive(Debug, Error)]
pub enum CleanError {
    #[error(transparent)]
    Segment(#[from] crate::segmenter::SegmentError),
    #[error(transparent)]
    Embed(#[from] crate::embed::EmbedError),
    #[error(transparent)]
    Ann(#[from] crate::ann::AnnError),
    #[error(transparent)]
    Groups(#[from] crate::groups::GroupsError),
    #[error("invalid clean config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    KeptCore,
    Kept,
    RemovedOutlier,
    RemovedIrrelevant,
    KeptByFallback,
}

impl Verdict {
    pub fn is_removed(self) -> bool {
        matches!(self, Verdict::RemovedOutlier | Verdict::RemovedIrrelevant)
    }
}

/// Per-segment verdict with the distances that justified it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalDecision {
    pub segment_id: usize,
    pub verdict: Verdict,
    /// Outlier group name or `"too irrelevant"`. Present on removals, and
    /// retained when a removal is undone by the fallback.
    pub reason: Option<String>,
    pub d_core: f32,
    pub d_outlier: f32,
    pub nearest_phrase: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanStats {
    pub n_segments: usize,
    /// Segments missing from the output (0 when the fallback restored them).
    pub n_removed: usize,
    /// Char fraction the classifier flagged for removal, before any fallback
    /// restoration; this is the number the fallback threshold is compared to.
    pub removed_char_fraction: f32,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanResult {
    /// Kept segments in original document order.
    pub kept_segments: Vec<Segment>,
    /// One decision per input segment, in segment-id order.
    pub decisions: Vec<RemovalDecision>,
    pub fallback_applied: bool,
    pub stats: CleanStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleanConfig {
    /// Fraction of segments selected as core content.
    pub core_fraction_k: f32,
    /// Max distance to the nearest core anchor before a segment is removed as
    /// too irrelevant.
    pub distance_cutoff_d: f32,
    /// A segment only counts as an outlier match when its nearest outlier
    /// phrase is closer than every core anchor AND within this absolute
    /// distance.
    pub outlier_match_cutoff: f32,
    /// Removing more than this char fraction triggers the conservative
    /// fallback: everything is kept and the result is flagged.
    pub max_removal_fraction: f32,
    /// Whether the metadata vector itself also acts as a core anchor.
    pub include_metadata_in_core_anchors: bool,
    pub ef_search: usize,
    pub embedder: EmbedderConfig,
    pub ann: AnnParams,
    pub segmenter: SegmenterConfig,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            core_fraction_k: 0.2,
            distance_cutoff_d: 0.8,
            outlier_match_cutoff: 0.25,
            max_removal_fraction: 0.8,
            include_metadata_in_core_anchors: true,
            ef_search: 64,
            embedder: EmbedderConfig::default(),
            ann: AnnParams::default(),
            segmenter: SegmenterConfig::default(),
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<(), CleanError> {
        if !(self.core_fraction_k > 0.0 && self.core_fraction_k <= 1.0) {
            return Err(CleanError::InvalidConfig(
                "core_fraction_k must be in (0, 1]".into(),
            ));
        }
        if !(self.distance_cutoff_d >= 0.0) {
            return Err(CleanError::InvalidConfig(
                "distance_cutoff_d must be >= 0".into(),
            ));
        }
        if !(self.outlier_match_cutoff >= 0.0) {
            return Err(CleanError::InvalidConfig(
                "outlier_match_cutoff must be >= 0".into(),
            ));
        }
        if !(self.max_removal_fraction > 0.0 && self.max_removal_fraction <= 1.0) {
            return Err(CleanError::InvalidConfig(
                "max_removal_fraction must be in (0, 1]".into(),
            ));
        }
        if self.ef_search == 0 {
            return Err(CleanError::InvalidConfig("ef_search must be >= 1".into()));
        }
        self.embedder.validate()?;
        Ok(())
    }
}

/// Ids of the `max(1, ceil(k * N))` segments nearest to the metadata vector,
/// ties broken toward the smaller id. Returned sorted ascending by id.
pub fn select_core(
    segment_vectors: &[EmbeddingVector],
    metadata_vector: &EmbeddingVector,
    k: f32,
) -> Vec<usize> {
    let n_total = segment_vectors.len();
    if n_total == 0 {
        return Vec::new();
    }
    // The epsilon keeps f32 artifacts like 0.3 * 10 = 3.0000001 from bumping
    // the ceiling to 4.
    let wanted = ((f64::from(k) * n_total as f64) - 1e-6).ceil() as usize;
    let n = wanted.max(1).min(n_total);
    let mut scored: Vec<(f32, usize)> = segment_vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            (
                crate::embed::ip_from_slices(v.as_slice(), metadata_vector.as_slice()),
                i,
            )
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut ids: Vec<usize> = scored[..n].iter().map(|&(_, i)| i).collect();
    ids.sort_unstable();
    ids
}

/// Outcome of classifying one non-core segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub d_core: f32,
    pub d_outlier: f32,
    pub nearest_phrase: Option<String>,
}

/// Classify one segment against an index holding both the outlier phrases and
/// the per-document core/metadata anchors.
///
/// Rule order: (1) nearer to an outlier phrase than to any core anchor and
/// within `outlier_match_cutoff` → removed with the phrase's group as reason;
/// (2) otherwise farther than `distance_cutoff_d` from every core anchor →
/// removed as too irrelevant; (3) otherwise kept.
pub fn classify_segment(
    vector: &EmbeddingVector,
    anchors: &AnnIndex,
    phrases: &[(String, String)],
    config: &CleanConfig,
) -> Result<Classification, CleanError> {
    let n_outlier = anchors.count_matching(|l| l.kind == PointKind::OutlierPhrase);
    let n_core = anchors.len() - n_outlier;
    // Enough results to guarantee at least one hit from each population.
    let k = n_core.max(n_outlier).saturating_add(1).min(anchors.len());
    let ef = config.ef_search.max(k);
    let hits = anchors.search(vector, k, ef)?;

    let mut core_hit: Option<f32> = None;
    let mut outlier_hit: Option<(f32, PointLabel)> = None;
    for (label, dist) in hits {
        match label.kind {
            PointKind::OutlierPhrase => {
                if outlier_hit.is_none() {
                    outlier_hit = Some((dist, label));
                }
            }
            PointKind::CoreSegment | PointKind::Metadata => {
                if core_hit.is_none() {
                    core_hit = Some(dist);
                }
            }
        }
        if core_hit.is_some() && outlier_hit.is_some() {
            break;
        }
    }
    // Approximate search can in principle miss a whole population; fall back
    // to an exact scan over it rather than inventing a distance.
    let d_core = match core_hit {
        Some(d) => d,
        None => anchors
            .nearest_matching(vector, |l| l.kind != PointKind::OutlierPhrase)?
            .map(|(_, d)| d)
            .unwrap_or(f32::INFINITY),
    };
    let (d_outlier, outlier_label) = match outlier_hit {
        Some((d, l)) => (d, Some(l)),
        None => match anchors.nearest_matching(vector, |l| l.kind == PointKind::OutlierPhrase)? {
            Some((l, d)) => (d, Some(l)),
            None => (f32::INFINITY, None),
        },
    };

    let nearest_phrase = outlier_label
        .as_ref()
        .and_then(|l| phrases.get(l.ref_id as usize))
        .map(|(_, phrase)| phrase.clone());

    let (verdict, reason) = if d_outlier < d_core && d_outlier <= config.outlier_match_cutoff {
        let group = outlier_label
            .as_ref()
            .and_then(|l| l.group_name.clone())
            .unwrap_or_else(|| "outlier".to_string());
        (Verdict::RemovedOutlier, Some(group))
    } else if d_core > config.distance_cutoff_d {
        (Verdict::RemovedIrrelevant, Some("too irrelevant".to_string()))
    } else {
        (Verdict::Kept, None)
    };

    Ok(Classification {
        verdict,
        reason,
        d_core,
        d_outlier,
        nearest_phrase,
    })
}

/// A parsed and embedded document, ready to be cleaned at any `(k, d)`.
/// Parameter sweeps compute this once per document and reuse it.
#[derive(Debug, Clone)]
pub struct EmbeddedDocument {
    pub metadata: DocumentMetadata,
    pub segments: Vec<Segment>,
    pub segment_vectors: Vec<EmbeddingVector>,
    /// Metadata embedding, or the normalized centroid of the segment vectors
    /// when the document has no usable metadata.
    pub anchor_vector: EmbeddingVector,
    pub anchor_from_metadata: bool,
}

/// Everything `clean_document` produces plus the parsed segments, so callers
/// can show the text of removed segments without re-parsing.
#[derive(Debug, Clone)]
pub struct CleanOutcome {
    pub result: CleanResult,
    pub document: EmbeddedDocument,
}

pub struct Pipeline {
    config: CleanConfig,
    embedder: Embedder,
    outlier_index: AnnIndex,
    /// `(group_name, phrase)` by phrase index; positions match the outlier
    /// points' `ref_id`s.
    phrases: Vec<(String, String)>,
}

impl Pipeline {
    /// Embed the group phrases and build the outlier index from scratch.
    pub fn new(config: CleanConfig, groups: &[OutlierGroup]) -> Result<Self, CleanError> {
        config.validate()?;
        let embedder = Embedder::from_config(config.embedder.clone())?;
        let phrases = flatten_phrases(groups);
        if phrases.is_empty() {
            return Err(CleanError::InvalidConfig(
                "outlier lexicon has no phrases".into(),
            ));
        }
        let texts: Vec<String> = phrases.iter().map(|(_, p)| p.clone()).collect();
        let vectors = embedder.embed_texts(&texts)?;
        let points: Vec<(EmbeddingVector, PointLabel)> = vectors
            .into_iter()
            .zip(&phrases)
            .enumerate()
            .map(|(i, (v, (group, _)))| (v, PointLabel::outlier(group.clone(), i as u64)))
            .collect();
        let outlier_index = ann::build_index(&points, config.ann)?;
        Ok(Self {
            config,
            embedder,
            outlier_index,
            phrases,
        })
    }

    /// Reuse a prebuilt outlier index byte dump instead of re-embedding the
    /// lexicon. `groups` must be the lexicon the dump was built from.
    pub fn from_index_bytes(
        config: CleanConfig,
        groups: &[OutlierGroup],
        bytes: &[u8],
    ) -> Result<Self, CleanError> {
        config.validate()?;
        let embedder = Embedder::from_config(config.embedder.clone())?;
        let outlier_index = ann::deserialize(bytes)?;
        if outlier_index.dim() != embedder.dim() {
            return Err(CleanError::InvalidConfig(format!(
                "index dim {} does not match embedder dim {}",
                outlier_index.dim(),
                embedder.dim()
            )));
        }
        let phrases = flatten_phrases(groups);
        let n_outlier = outlier_index.count_matching(|l| l.kind == PointKind::OutlierPhrase);
        if n_outlier != phrases.len() || n_outlier != outlier_index.len() {
            return Err(CleanError::InvalidConfig(format!(
                "index holds {n_outlier} outlier phrases but the groups define {}; \
                 rebuild the index from this lexicon",
                phrases.len()
            )));
        }
        Ok(Self {
            config,
            embedder,
            outlier_index,
            phrases,
        })
    }

    pub fn config(&self) -> &CleanConfig {
        &self.config
    }

    pub fn phrases(&self) -> &[(String, String)] {
        &self.phrases
    }

    /// Serialized outlier index, suitable for `from_index_bytes`.
    pub fn index_bytes(&self) -> Vec<u8> {
        ann::serialize(&self.outlier_index)
    }

    /// Parse and embed a document. Metadata and all segments go through the
    /// embedder in a single batched call.
    pub fn embed_document(&self, html: &str) -> Result<EmbeddedDocument, CleanError> {
        let (metadata, segments) = parse_document(html, &self.config.segmenter)?;
        // Metadata shorter than an n-gram carries no signal; treat as absent.
        let anchor_text = Some(metadata.combined_text.as_str())
            .filter(|t| t.chars().count() >= 3)
            .map(str::to_string);

        let mut texts: Vec<String> = Vec::with_capacity(segments.len() + 1);
        if let Some(t) = &anchor_text {
            texts.push(t.clone());
        }
        texts.extend(segments.iter().map(|s| s.text.clone()));
        let mut vectors = self.embedder.embed_texts(&texts)?;

        let (anchor_vector, anchor_from_metadata) = if anchor_text.is_some() {
            (vectors.remove(0), true)
        } else {
            (centroid(&vectors), false)
        };

        Ok(EmbeddedDocument {
            metadata,
            segments,
            segment_vectors: vectors,
            anchor_vector,
            anchor_from_metadata,
        })
    }

    /// Clean an already-embedded document at the given `(k, d)`. The other
    /// knobs come from the pipeline config.
    pub fn clean_embedded(
        &self,
        doc: &EmbeddedDocument,
        k: f32,
        d: f32,
    ) -> Result<CleanResult, CleanError> {
        let started = Instant::now();
        let config = CleanConfig {
            core_fraction_k: k,
            distance_cutoff_d: d,
            ..self.config.clone()
        };

        let core_ids = select_core(&doc.segment_vectors, &doc.anchor_vector, k);
        let mut anchor_points: Vec<(EmbeddingVector, PointLabel)> = core_ids
            .iter()
            .map(|&id| {
                (
                    doc.segment_vectors[id].clone(),
                    PointLabel::core_segment(id as u64),
                )
            })
            .collect();
        if config.include_metadata_in_core_anchors {
            anchor_points.push((doc.anchor_vector.clone(), PointLabel::metadata()));
        }
        let anchors = self.outlier_index.add_points(&anchor_points)?;

        let mut decisions = Vec::with_capacity(doc.segments.len());
        for (id, vector) in doc.segment_vectors.iter().enumerate() {
            let mut c = classify_segment(vector, &anchors, &self.phrases, &config)?;
            if core_ids.binary_search(&id).is_ok() {
                // Core segments are kept unconditionally.
                c.verdict = Verdict::KeptCore;
                c.reason = None;
            }
            decisions.push(RemovalDecision {
                segment_id: id,
                verdict: c.verdict,
                reason: c.reason,
                d_core: c.d_core,
                d_outlier: c.d_outlier,
                nearest_phrase: c.nearest_phrase,
            });
        }

        let total_chars: usize = doc.segments.iter().map(|s| s.text.chars().count()).sum();
        let flagged_chars: usize = doc
            .segments
            .iter()
            .zip(&decisions)
            .filter(|(_, d)| d.verdict.is_removed())
            .map(|(s, _)| s.text.chars().count())
            .sum();
        let flagged_fraction = if total_chars == 0 {
            0.0
        } else {
            flagged_chars as f32 / total_chars as f32
        };

        let fallback_applied = flagged_fraction > config.max_removal_fraction;
        if fallback_applied {
            for d in &mut decisions {
                if d.verdict.is_removed() {
                    d.verdict = Verdict::KeptByFallback;
                }
            }
        }

        let kept_segments: Vec<Segment> = doc
            .segments
            .iter()
            .zip(&decisions)
            .filter(|(_, d)| !d.verdict.is_removed())
            .map(|(s, _)| s.clone())
            .collect();

        let stats = CleanStats {
            n_segments: doc.segments.len(),
            n_removed: doc.segments.len() - kept_segments.len(),
            removed_char_fraction: flagged_fraction,
            elapsed_ms: started.elapsed().as_millis() as u64,
        };

        Ok(CleanResult {
            kept_segments,
            decisions,
            fallback_applied,
            stats,
        })
    }

    /// The full pipeline for one document: parse, embed, select core,
    /// classify, remove, and apply the fallback guard.
    pub fn clean_with_segments(&self, html: &str) -> Result<CleanOutcome, CleanError> {
        let started = Instant::now();
        let document = self.embed_document(html)?;
        let mut result = self.clean_embedded(
            &document,
            self.config.core_fraction_k,
            self.config.distance_cutoff_d,
        )?;
        result.stats.elapsed_ms = started.elapsed().as_millis() as u64;
        Ok(CleanOutcome { result, document })
    }

    pub fn clean_document(&self, html: &str) -> Result<CleanResult, CleanError> {
        Ok(self.clean_with_segments(html)?.result)
    }
}

/// Normalized mean of unit vectors; falls back to the first vector when the
/// sum cancels out.
fn centroid(vectors: &[EmbeddingVector]) -> EmbeddingVector {
    let dim = vectors.first().map_or(0, EmbeddingVector::dim);
    let mut sum = vec![0.0f32; dim];
    for v in vectors {
        for (acc, &x) in sum.iter_mut().zip(v.as_slice()) {
            *acc += x;
        }
    }
    EmbeddingVector::unit(sum).unwrap_or_else(|_| vectors[0].clone())
}
