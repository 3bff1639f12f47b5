//! `(k, d)` parameter sweeps over a labeled corpus.
//!
//! Each document is parsed and embedded exactly once; the grid then reuses the
//! cached embeddings, so a 3x3 sweep costs one embedding pass plus nine cheap
//! classification rounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pipeline::{EmbeddedDocument, Pipeline};

use super::{corpus_eval, Aggregation, EvalScores};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: f32,
    pub d: f32,
    /// Macro aggregation (mean per-document P/R, F of the means).
    pub scores: EvalScores,
    pub micro_scores: EvalScores,
    pub mean_removed_fraction: f64,
    /// Documents that failed to parse or embed and were skipped.
    pub skipped: usize,
}

/// Clean every `(html, truth)` document at every grid point and score the
/// output against the truth.
pub fn sweep(
    pipeline: &Pipeline,
    corpus: &[(String, String)],
    k_grid: &[f32],
    d_grid: &[f32],
) -> Vec<SweepPoint> {
    // One embedding pass per document, shared across all grid points.
    let embedded: Vec<Option<(EmbeddedDocument, &str)>> = corpus
        .par_iter()
        .map(|(html, truth)| {
            pipeline
                .embed_document(html)
                .ok()
                .map(|doc| (doc, truth.as_str()))
        })
        .collect();
    let embed_failures = embedded.iter().filter(|e| e.is_none()).count();

    let mut points = Vec::with_capacity(k_grid.len() * d_grid.len());
    for &k in k_grid {
        for &d in d_grid {
            let outcomes: Vec<Option<(String, String, f64)>> = embedded
                .par_iter()
                .map(|slot| {
                    let (doc, truth) = slot.as_ref()?;
                    let result = pipeline.clean_embedded(doc, k, d).ok()?;
                    let extracted = result
                        .kept_segments
                        .iter()
                        .map(|s| s.text.as_str())
                        .collect::<Vec<_>>()
                        .join("\n");
                    Some((
                        extracted,
                        (*truth).to_string(),
                        f64::from(result.stats.removed_char_fraction),
                    ))
                })
                .collect();

            let clean_failures = outcomes.iter().filter(|o| o.is_none()).count() - embed_failures;
            let pairs: Vec<(String, String)> = outcomes
                .iter()
                .flatten()
                .map(|(e, t, _)| (e.clone(), t.clone()))
                .collect();
            let mean_removed_fraction = if pairs.is_empty() {
                0.0
            } else {
                outcomes.iter().flatten().map(|(_, _, f)| f).sum::<f64>() / pairs.len() as f64
            };
            points.push(SweepPoint {
                k,
                d,
                scores: corpus_eval(&pairs, Aggregation::Macro),
                micro_scores: corpus_eval(&pairs, Aggregation::Micro),
                mean_removed_fraction,
                skipped: embed_failures + clean_failures,
            });
        }
    }
    points
}

/// Render sweep points as CSV, one row per grid point.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("k,d,precision,recall,f,mean_removed_fraction,skipped\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
            p.k, p.d, p.scores.precision, p.scores.recall, p.scores.f_score,
            p.mean_removed_fraction, p.skipped
        ));
    }
    out
}
