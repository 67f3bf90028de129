use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::features::FeatureColumnMeta;
use crate::panel::Format;
use crate::pca::PcaModel;

pub const LAG_BUCKETS: [&str; 5] = ["0-3", "4-7", "8-11", "12-15", "16-19"];

pub fn lag_bucket(lag: u8) -> usize {
    (lag as usize / 4).min(LAG_BUCKETS.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingEntry {
    pub column: String,
    pub base_variable: String,
    pub format: Format,
    pub lag: u8,
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentContribution {
    pub component: usize,
    pub importance: f64,
    pub top_variables: Vec<LoadingEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketTally {
    pub bucket: usize,
    pub format: Format,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImportanceDecomposition {
    pub components: Vec<ComponentContribution>,
    /// One cell per (lag bucket, format), bucket-major.
    pub tallies: Vec<BucketTally>,
}

impl ImportanceDecomposition {
    pub fn total(&self) -> usize {
        self.tallies.iter().map(|t| t.count).sum()
    }

    pub fn mentions(&self, base_variable: &str) -> bool {
        self.components
            .iter()
            .flat_map(|c| &c.top_variables)
            .any(|e| e.base_variable == base_variable)
    }

    pub fn count(&self, bucket: usize, format: Format) -> usize {
        self.tallies
            .iter()
            .find(|t| t.bucket == bucket && t.format == format)
            .map_or(0, |t| t.count)
    }

    /// Cell-wise sum; used to pool subsets.
    pub fn merge_tallies(into: &mut Vec<BucketTally>, from: &[BucketTally]) {
        if into.is_empty() {
            *into = empty_tallies();
        }
        for t in from {
            if let Some(cell) = into.iter_mut().find(|c| c.bucket == t.bucket && c.format == t.format) {
                cell.count += t.count;
            }
        }
    }
}

pub(crate) fn empty_tallies() -> Vec<BucketTally> {
    (0..LAG_BUCKETS.len())
        .flat_map(|bucket| Format::ALL.into_iter().map(move |format| BucketTally { bucket, format, count: 0 }))
        .collect()
}

fn top_indices(scores: impl Iterator<Item = f64>, n: usize) -> Vec<usize> {
    let mut idx: Vec<(usize, f64)> = scores.enumerate().collect();
    idx.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    idx.into_iter().take(n).map(|(i, _)| i).collect()
}

/// Maps per-component model importance back to original columns: the
/// `top_c` most important components, each contributing its `top_v`
/// largest-|loading| columns to a lag-bucket by format tally.
///
/// `importance[j]` belongs to kept component `j`; `metas` describe the
/// PCA input columns. Ties go to the lower index.
pub fn decompose_importance(
    importance: &[f64],
    pca: &PcaModel,
    metas: &[FeatureColumnMeta],
    top_c: usize,
    top_v: usize,
) -> ImportanceDecomposition {
    let n_comp = importance.len().min(pca.kept);
    let mut tallies = empty_tallies();
    let mut components = Vec::new();
    for c in top_indices(importance[..n_comp].iter().copied(), top_c) {
        let picks = top_indices((0..pca.dim()).map(|f| libm::fabs(pca.loading(f, c))), top_v);
        let top_variables: Vec<LoadingEntry> = picks
            .into_iter()
            .map(|f| {
                let m = &metas[f];
                LoadingEntry {
                    column: m.name(),
                    base_variable: m.base_variable.clone(),
                    format: m.format,
                    lag: m.lag,
                    loading: pca.loading(f, c),
                }
            })
            .collect();
        for e in &top_variables {
            if let Some(cell) = tallies
                .iter_mut()
                .find(|t| t.bucket == lag_bucket(e.lag) && t.format == e.format)
            {
                cell.count += 1;
            }
        }
        components.push(ComponentContribution {
            component: c,
            importance: importance[c],
            top_variables,
        });
    }
    ImportanceDecomposition { components, tallies }
}
