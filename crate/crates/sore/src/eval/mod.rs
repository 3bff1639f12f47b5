//! Evaluation and tuning: token-overlap precision/recall, keyword removal
//! accuracy, `(k, d)` parameter sweeps, and a synthetic labeled corpus.
//!
//! Scoring is order-insensitive token-multiset overlap: removal never reorders
//! text, so order carries no extra information, and multiset counting keeps
//! the metric linear in document size.

mod corpus;
mod keywords;
mod sweep;

pub use corpus::{generate_synthetic_corpus, BoilerplateSeed, SyntheticDoc};
pub use keywords::{keyword_accuracy, KeywordAccuracyRow, KeywordDoc};
pub use sweep::{sweep, sweep_csv, SweepPoint};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalScores {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Mean of per-document precision and recall; F recomputed from the means.
    Macro,
    /// Global token counts across the corpus.
    Micro,
}

/// NFKC-normalize, lowercase, split on Unicode whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.nfkc()
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

pub(crate) fn token_counts(text: &str) -> (HashMap<String, usize>, usize) {
    let tokens = tokenize(text);
    let total = tokens.len();
    let mut counts = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    (counts, total)
}

fn intersection_size(a: &HashMap<String, usize>, b: &HashMap<String, usize>) -> usize {
    a.iter()
        .map(|(token, &count)| count.min(b.get(token).copied().unwrap_or(0)))
        .sum()
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Token-multiset precision/recall of `extracted` against `truth`.
/// Both empty counts as a perfect match; exactly one empty scores zero.
pub fn overlap_scores(extracted: &str, truth: &str) -> EvalScores {
    let (ext_counts, ext_total) = token_counts(extracted);
    let (truth_counts, truth_total) = token_counts(truth);
    match (ext_total, truth_total) {
        (0, 0) => {
            return EvalScores {
                precision: 1.0,
                recall: 1.0,
                f_score: 1.0,
            }
        }
        (0, _) | (_, 0) => {
            return EvalScores {
                precision: 0.0,
                recall: 0.0,
                f_score: 0.0,
            }
        }
        _ => {}
    }
    let intersection = intersection_size(&ext_counts, &truth_counts) as f64;
    let precision = intersection / ext_total as f64;
    let recall = intersection / truth_total as f64;
    EvalScores {
        precision,
        recall,
        f_score: f_score(precision, recall),
    }
}

/// Fraction of the segment's tokens that also occur in the truth document
/// (multiset semantics). Used to judge whether a removal was correct.
pub(crate) fn overlap_fraction(segment: &str, truth_counts: &HashMap<String, usize>) -> f64 {
    let (seg_counts, seg_total) = token_counts(segment);
    if seg_total == 0 {
        return 1.0;
    }
    intersection_size(&seg_counts, truth_counts) as f64 / seg_total as f64
}

/// Aggregate `(extracted, truth)` pairs.
pub fn corpus_eval(pairs: &[(String, String)], aggregation: Aggregation) -> EvalScores {
    match aggregation {
        Aggregation::Macro => {
            let n = pairs.len().max(1) as f64;
            let mut p_sum = 0.0;
            let mut r_sum = 0.0;
            for (extracted, truth) in pairs {
                let s = overlap_scores(extracted, truth);
                p_sum += s.precision;
                r_sum += s.recall;
            }
            let precision = p_sum / n;
            let recall = r_sum / n;
            EvalScores {
                precision,
                recall,
                f_score: f_score(precision, recall),
            }
        }
        Aggregation::Micro => {
            let mut intersection = 0usize;
            let mut ext_total = 0usize;
            let mut truth_total = 0usize;
            for (extracted, truth) in pairs {
                let (ec, et) = token_counts(extracted);
                let (tc, tt) = token_counts(truth);
                intersection += intersection_size(&ec, &tc);
                ext_total += et;
                truth_total += tt;
            }
            if ext_total == 0 && truth_total == 0 {
                return EvalScores {
                    precision: 1.0,
                    recall: 1.0,
                    f_score: 1.0,
                };
            }
            let precision = if ext_total == 0 {
                0.0
            } else {
                intersection as f64 / ext_total as f64
            };
            let recall = if truth_total == 0 {
                0.0
            } else {
                intersection as f64 / truth_total as f64
            };
            EvalScores {
                precision,
                recall,
                f_score: f_score(precision, recall),
            }
        }
    }
}

/// All aggregations side by side. Corpus-level F depends on how you average,
/// so reports show F-of-mean-P/R, mean of per-document F, and micro.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub n_docs: usize,
    /// Macro: mean P, mean R, F recomputed from those means.
    pub macro_scores: EvalScores,
    /// Mean of the per-document F scores.
    pub macro_mean_f: f64,
    pub micro_scores: EvalScores,
}

pub fn corpus_report(pairs: &[(String, String)]) -> CorpusReport {
    let macro_scores = corpus_eval(pairs, Aggregation::Macro);
    let micro_scores = corpus_eval(pairs, Aggregation::Micro);
    let macro_mean_f = pairs
        .iter()
        .map(|(e, t)| overlap_scores(e, t).f_score)
        .sum::<f64>()
        / pairs.len().max(1) as f64;
    CorpusReport {
        n_docs: pairs.len(),
        macro_scores,
        macro_mean_f,
        micro_scores,
    }
}
