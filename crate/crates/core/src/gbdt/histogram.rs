use alloc::vec;
use alloc::vec::Vec;

use super::gain::{split_gain, GradStats};
use super::{BinnedMatrix, HyperParams};

/// Per-feature, per-bin gradient statistics for one leaf. Each feature's
/// slice has one entry per regular bin followed by the missing bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    offsets: Vec<usize>,
    bins: Vec<GradStats>,
}

impl Histogram {
    pub fn empty(binned: &BinnedMatrix) -> Self {
        let mut offsets = Vec::with_capacity(binned.n_features() + 1);
        let mut total = 0;
        offsets.push(0);
        for m in &binned.mappers {
            total += m.n_bins() + 1;
            offsets.push(total);
        }
        Self {
            offsets,
            bins: vec![GradStats::default(); total],
        }
    }

    /// Accumulates `rows` for the listed features only.
    pub fn build(
        binned: &BinnedMatrix,
        grad: &[f64],
        hess: &[f64],
        rows: &[u32],
        features: &[usize],
    ) -> Self {
        let mut h = Self::empty(binned);
        for &f in features {
            let codes = binned.feature_codes(f);
            let slot = &mut h.bins[h.offsets[f]..h.offsets[f + 1]];
            for &r in rows {
                let r = r as usize;
                let b = &mut slot[codes[r] as usize];
                b.g += grad[r];
                b.h += hess[r];
                b.n += 1;
            }
        }
        h
    }

    pub fn feature(&self, f: usize) -> &[GradStats] {
        &self.bins[self.offsets[f]..self.offsets[f + 1]]
    }

    /// `self - other`, bin by bin.
    pub fn subtract(&self, other: &Histogram) -> Histogram {
        Histogram {
            offsets: self.offsets.clone(),
            bins: self
                .bins
                .iter()
                .zip(&other.bins)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitInfo {
    pub feature: usize,
    /// Regular bins `<= threshold` go left.
    pub threshold: u16,
    /// Direction of the missing bin.
    pub default_left: bool,
    pub gain: f64,
    pub left: GradStats,
    pub right: GradStats,
}

/// Best admissible split of a leaf with statistics `total`.
///
/// A split is admissible when both children hold at least
/// `min_data_in_leaf` rows and `min_sum_hessian_in_leaf` hessian, and its
/// gain strictly exceeds `min_gain_to_split`. Ties keep the lowest feature,
/// then the lowest threshold, then missing-left.
pub fn find_best_split(
    hist: &Histogram,
    features: &[usize],
    total: GradStats,
    params: &HyperParams,
) -> Option<SplitInfo> {
    let mut best: Option<SplitInfo> = None;
    let min_n = params.min_data_in_leaf as u32;
    let admissible = |s: GradStats| s.n >= min_n && s.h >= params.min_sum_hessian_in_leaf;
    for &f in features {
        let bins = hist.feature(f);
        let (regular, missing) = bins.split_at(bins.len() - 1);
        let missing = missing[0];
        let directions: &[bool] = if missing.n > 0 { &[true, false] } else { &[true] };
        let mut left = GradStats::default();
        for (t, b) in regular.iter().enumerate().take(regular.len().saturating_sub(1)) {
            left += *b;
            for &default_left in directions {
                let l = if default_left && missing.n > 0 { left + missing } else { left };
                let r = total - l;
                if !admissible(l) || !admissible(r) {
                    continue;
                }
                let gain = split_gain(total, l, params);
                if gain > params.min_gain_to_split && best.is_none_or(|b| gain > b.gain) {
                    best = Some(SplitInfo {
                        feature: f,
                        threshold: t as u16,
                        default_left,
                        gain,
                        left: l,
                        right: r,
                    });
                }
            }
        }
    }
    best
}
