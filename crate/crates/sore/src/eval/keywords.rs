//! Per-keyword removal accuracy.
//!
//! For every outlier phrase: how often did removals attributed to it hit text
//! that is genuinely absent from the ground truth? Ambiguous one-word phrases
//! ("Home") score visibly worse than distinctive ones ("All rights reserved"),
//! which is exactly what the report exists to surface.

use serde::{Deserialize, Serialize};

use crate::pipeline::{RemovalDecision, Verdict};

use super::{overlap_fraction, token_counts};

/// One evaluated document: its decision log, segment texts (indexed by
/// segment id), and the ground-truth text.
pub struct KeywordDoc<'a> {
    pub decisions: &'a [RemovalDecision],
    pub segment_texts: &'a [String],
    pub truth: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordAccuracyRow {
    pub phrase: String,
    /// Removals attributed to this phrase.
    pub occurrence: usize,
    /// Fraction of those removals where the removed segment is absent from
    /// the truth (< 50% token overlap). `None` when the phrase never fired.
    pub accuracy: Option<f64>,
}

/// Tally removal accuracy per phrase, sorted ascending by accuracy (the
/// least reliable keywords first); phrases that never fired sort last.
pub fn keyword_accuracy(docs: &[KeywordDoc<'_>], phrases: &[String]) -> Vec<KeywordAccuracyRow> {
    let mut occurrence: Vec<usize> = vec![0; phrases.len()];
    let mut correct: Vec<usize> = vec![0; phrases.len()];

    for doc in docs {
        let (truth_counts, _) = token_counts(doc.truth);
        for decision in doc.decisions {
            if decision.verdict != Verdict::RemovedOutlier {
                continue;
            }
            let Some(phrase) = &decision.nearest_phrase else {
                continue;
            };
            let Some(idx) = phrases.iter().position(|p| p == phrase) else {
                continue;
            };
            let Some(text) = doc.segment_texts.get(decision.segment_id) else {
                continue;
            };
            occurrence[idx] += 1;
            if overlap_fraction(text, &truth_counts) < 0.5 {
                correct[idx] += 1;
            }
        }
    }

    let mut rows: Vec<KeywordAccuracyRow> = phrases
        .iter()
        .enumerate()
        .map(|(i, phrase)| KeywordAccuracyRow {
            phrase: phrase.clone(),
            occurrence: occurrence[i],
            accuracy: (occurrence[i] > 0).then(|| correct[i] as f64 / occurrence[i] as f64),
        })
        .collect();

    rows.sort_by(|a, b| match (a.accuracy, b.accuracy) {
        (Some(x), Some(y)) => x
            .total_cmp(&y)
            .then(b.occurrence.cmp(&a.occurrence))
            .then(a.phrase.cmp(&b.phrase)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.phrase.cmp(&b.phrase),
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn removal(segment_id: usize, phrase: &str) -> RemovalDecision {
        RemovalDecision {
            segment_id,
            verdict: Verdict::RemovedOutlier,
            reason: Some("Some Group".into()),
            d_core: 0.9,
            d_outlier: 0.05,
            nearest_phrase: Some(phrase.into()),
        }
    }

    #[test]
    fn unmatched_phrase_has_null_accuracy() {
        let phrases = vec!["Home".to_string(), "Subscribe".to_string()];
        let segment_texts = vec!["Home".to_string()];
        let decisions = vec![removal(0, "Home")];
        let docs = vec![KeywordDoc {
            decisions: &decisions,
            segment_texts: &segment_texts,
            truth: "an article about glaciers",
        }];
        let rows = keyword_accuracy(&docs, &phrases);
        let home = rows.iter().find(|r| r.phrase == "Home").unwrap();
        assert_eq!(home.occurrence, 1);
        assert_eq!(home.accuracy, Some(1.0));
        let sub = rows.iter().find(|r| r.phrase == "Subscribe").unwrap();
        assert_eq!(sub.occurrence, 0);
        assert_eq!(sub.accuracy, None);
        // Fired phrases sort before silent ones.
        assert_eq!(rows[0].phrase, "Home");
    }

    #[test]
    fn removal_of_truth_text_counts_as_incorrect() {
        let phrases = vec!["Home".to_string()];
        let segment_texts = vec!["Home".to_string(), "Home".to_string()];
        // Segment 0 is navigation (not in truth), segment 1 is a real section
        // heading that does occur in the truth.
        let decisions = vec![removal(0, "Home"), removal(1, "Home")];
        let docs = vec![KeywordDoc {
            decisions: &decisions,
            segment_texts: &segment_texts,
            truth: "home improvement on a budget",
        }];
        let rows = keyword_accuracy(&docs, &phrases);
        // Truth contains the token "home", so both removals look wrong.
        assert_eq!(rows[0].occurrence, 2);
        assert_eq!(rows[0].accuracy, Some(0.0));
    }

    #[test]
    fn rows_sort_ascending_by_accuracy() {
        let phrases = vec!["Good".to_string(), "Bad".to_string()];
        let segment_texts = vec![
            "noise gone".to_string(),
            "kept words".to_string(),
            "more noise".to_string(),
        ];
        let decisions = vec![removal(0, "Good"), removal(1, "Bad"), removal(2, "Good")];
        let docs = vec![KeywordDoc {
            decisions: &decisions,
            segment_texts: &segment_texts,
            truth: "kept words matter here",
        }];
        let rows = keyword_accuracy(&docs, &phrases);
        assert_eq!(rows[0].phrase, "Bad");
        assert_eq!(rows[0].accuracy, Some(0.0));
        assert_eq!(rows[1].phrase, "Good");
        assert_eq!(rows[1].accuracy, Some(1.0));
    }

    #[test]
    fn only_outlier_removals_are_counted() {
        let phrases = vec!["Home".to_string()];
        let segment_texts = vec!["Home".to_string()];
        let decisions = vec![RemovalDecision {
            segment_id: 0,
            verdict: Verdict::RemovedIrrelevant,
            reason: Some("too irrelevant".into()),
            d_core: 0.95,
            d_outlier: 0.4,
            nearest_phrase: Some("Home".into()),
        }];
        let docs = vec![KeywordDoc {
            decisions: &decisions,
            segment_texts: &segment_texts,
            truth: "unrelated",
        }];
        let rows = keyword_accuracy(&docs, &phrases);
        assert_eq!(rows[0].occurrence, 0);
    }
}
