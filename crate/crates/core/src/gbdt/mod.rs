//! Histogram-based gradient-boosted decision trees for multiclass
//! classification with a softmax objective.
//!
//! Features are quantile-binned once ([`bin_features`]); each boosting
//! round grows one tree per class on per-bin gradient histograms.
//! [`GrowthPolicy::LeafWise`] always expands the frontier leaf with the
//! largest gain; [`GrowthPolicy::LevelWise`] expands depth by depth and is
//! kept for comparison.

mod binning;
mod gain;
mod histogram;
mod model;
mod params;
mod tree;

pub use binning::{bin_features, BinMapper, BinnedMatrix};
pub use gain::{leaf_weight, soft_threshold, split_gain, GradStats};
pub use histogram::{find_best_split, Histogram, SplitInfo};
pub use model::{
    fit, fit_with_validation, log_loss, softmax_gradients, FitReport, GbdtModel, ImportanceKind,
};
pub use params::{GrowthPolicy, HyperParams};
pub use tree::{Node, Tree};
