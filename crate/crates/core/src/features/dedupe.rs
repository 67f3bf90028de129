use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::stats::unit_centered;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPair {
    pub dropped: String,
    pub kept: String,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupeOutcome {
    pub matrix: FeatureMatrix,
    /// Indices into the input columns that survived.
    pub kept: Vec<usize>,
    pub dropped: Vec<DroppedPair>,
}

/// Greedy correlation pruning in column order: a column is dropped when its
/// Pearson |r| with any already-kept column exceeds `cutoff`. Correlations
/// are measured on `fit_rows` (all rows when `None`). Expects imputed input.
pub fn correlation_dedupe_inputs(
    m: &FeatureMatrix,
    cutoff: f64,
    fit_rows: Option<&[usize]>,
) -> DedupeOutcome {
    let all: Vec<usize>;
    let rows = match fit_rows {
        Some(r) => r,
        None => {
            all = (0..m.n_rows()).collect();
            &all
        }
    };
    let mut kept: Vec<usize> = Vec::new();
    let mut kept_unit: Vec<Vec<f64>> = Vec::new();
    let mut dropped = Vec::new();
    for (c, col) in m.columns().iter().enumerate() {
        let values: Vec<f64> = rows.iter().map(|&r| col[r].unwrap_or(f64::NAN)).collect();
        let unit = unit_centered(&values);
        let hit = kept.iter().zip(&kept_unit).find_map(|(&k, ku)| {
            let r: f64 = unit.iter().zip(ku).map(|(a, b)| a * b).sum();
            (libm::fabs(r) > cutoff).then_some((k, r))
        });
        match hit {
            Some((k, r)) => dropped.push(DroppedPair {
                dropped: m.metas()[c].name(),
                kept: m.metas()[k].name(),
                correlation: r,
            }),
            None => {
                kept.push(c);
                kept_unit.push(unit);
            }
        }
    }
    DedupeOutcome {
        matrix: m.select_columns(&kept),
        kept,
        dropped,
    }
}
