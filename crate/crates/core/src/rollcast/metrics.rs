use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub(crate) fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Counts split by whether the model and the consensus predicted the same
/// class. Fractions are derived; an empty set has no fraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalAccuracy {
    pub n_converge: usize,
    pub converge_model_correct: usize,
    pub converge_consensus_correct: usize,
    pub n_diverge: usize,
    pub diverge_model_correct: usize,
    pub diverge_consensus_correct: usize,
}

impl ConditionalAccuracy {
    pub fn n_scored(&self) -> usize {
        self.n_converge + self.n_diverge
    }

    pub fn converge_model_acc(&self) -> Option<f64> {
        ratio(self.converge_model_correct, self.n_converge)
    }

    pub fn converge_consensus_acc(&self) -> Option<f64> {
        ratio(self.converge_consensus_correct, self.n_converge)
    }

    pub fn diverge_model_acc(&self) -> Option<f64> {
        ratio(self.diverge_model_correct, self.n_diverge)
    }

    pub fn diverge_consensus_acc(&self) -> Option<f64> {
        ratio(self.diverge_consensus_correct, self.n_diverge)
    }

    pub fn model_acc(&self) -> Option<f64> {
        ratio(self.converge_model_correct + self.diverge_model_correct, self.n_scored())
    }

    pub fn consensus_acc(&self) -> Option<f64> {
        ratio(self.converge_consensus_correct + self.diverge_consensus_correct, self.n_scored())
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            n_converge: self.n_converge + other.n_converge,
            converge_model_correct: self.converge_model_correct + other.converge_model_correct,
            converge_consensus_correct: self.converge_consensus_correct + other.converge_consensus_correct,
            n_diverge: self.n_diverge + other.n_diverge,
            diverge_model_correct: self.diverge_model_correct + other.diverge_model_correct,
            diverge_consensus_correct: self.diverge_consensus_correct + other.diverge_consensus_correct,
        }
    }
}

/// Scores both forecasters against one actual.
pub fn conditional_accuracy(model: &[u32], consensus: &[u32], actual: &[u32]) -> ConditionalAccuracy {
    conditional_accuracy_paired(model, consensus, actual, actual)
}

/// Scores the model against `model_actual` and the consensus against
/// `consensus_actual` (GAAP and non-GAAP outcomes respectively).
pub fn conditional_accuracy_paired(
    model: &[u32],
    consensus: &[u32],
    model_actual: &[u32],
    consensus_actual: &[u32],
) -> ConditionalAccuracy {
    let mut out = ConditionalAccuracy::default();
    for (((m, c), ma), ca) in model.iter().zip(consensus).zip(model_actual).zip(consensus_actual) {
        let (mc, cc) = (usize::from(m == ma), usize::from(c == ca));
        if m == c {
            out.n_converge += 1;
            out.converge_model_correct += mc;
            out.converge_consensus_correct += cc;
        } else {
            out.n_diverge += 1;
            out.diverge_model_correct += mc;
            out.diverge_consensus_correct += cc;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub n_test: usize,
    /// Test rows with a known label.
    pub n_scored: usize,
    pub n_correct: usize,
    pub accuracy: Option<f64>,
    /// Recall of each true class.
    pub per_class: Vec<Option<f64>>,
    /// Absent when no consensus data overlaps the test quarter.
    pub consensus: Option<ConditionalAccuracy>,
}

impl MetricsBundle {
    pub fn new(predicted: &[u32], actual: &[Option<u32>], n_classes: u32) -> Self {
        let k = n_classes as usize;
        let mut hits = vec![0usize; k];
        let mut totals = vec![0usize; k];
        for (p, a) in predicted.iter().zip(actual) {
            if let Some(a) = *a {
                totals[a as usize] += 1;
                hits[a as usize] += usize::from(*p == a);
            }
        }
        let n_scored = totals.iter().sum();
        let n_correct = hits.iter().sum();
        Self {
            n_test: predicted.len(),
            n_scored,
            n_correct,
            accuracy: ratio(n_correct, n_scored),
            per_class: hits.iter().zip(&totals).map(|(&h, &t)| ratio(h, t)).collect(),
            consensus: None,
        }
    }
}
