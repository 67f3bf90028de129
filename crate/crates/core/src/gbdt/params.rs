use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthPolicy {
    /// Best-first: split the frontier leaf with the largest gain.
    #[default]
    LeafWise,
    /// Breadth-first: split every splittable leaf of a depth before going
    /// deeper, left to right, until the leaf budget is spent.
    LevelWise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub max_bin: usize,
    pub num_leaves: usize,
    pub min_data_in_leaf: usize,
    pub feature_fraction: f64,
    pub bagging_fraction: f64,
    /// Rows are re-sampled every `bagging_freq` rounds; 0 disables bagging.
    pub bagging_freq: usize,
    pub min_gain_to_split: f64,
    pub lambda_l1: f64,
    pub lambda_l2: f64,
    pub n_rounds: usize,
    pub min_sum_hessian_in_leaf: f64,
    pub max_depth: Option<usize>,
    /// Patience, in rounds, when a validation set is supplied.
    pub early_stopping_rounds: Option<usize>,
    pub growth: GrowthPolicy,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_bin: 255,
            num_leaves: 31,
            min_data_in_leaf: 20,
            feature_fraction: 1.0,
            bagging_fraction: 1.0,
            bagging_freq: 0,
            min_gain_to_split: 0.0,
            lambda_l1: 0.0,
            lambda_l2: 0.0,
            n_rounds: 200,
            min_sum_hessian_in_leaf: 1e-3,
            max_depth: None,
            early_stopping_rounds: Some(20),
            growth: GrowthPolicy::LeafWise,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let fraction = |v: f64| v > 0.0 && v <= 1.0;
        let non_negative = |v: f64| v >= 0.0 && !v.is_nan();
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive and finite"));
        }
        if !(2..=u16::MAX as usize - 1).contains(&self.max_bin) {
            return Err(Error::invalid("max_bin", "must lie in 2..=65534"));
        }
        if self.num_leaves < 2 {
            return Err(Error::invalid("num_leaves", "must be at least 2"));
        }
        if self.min_data_in_leaf < 1 {
            return Err(Error::invalid("min_data_in_leaf", "must be at least 1"));
        }
        if !fraction(self.feature_fraction) {
            return Err(Error::invalid("feature_fraction", "must lie in (0, 1]"));
        }
        if !fraction(self.bagging_fraction) {
            return Err(Error::invalid("bagging_fraction", "must lie in (0, 1]"));
        }
        if !non_negative(self.min_gain_to_split) {
            return Err(Error::invalid("min_gain_to_split", "must be non-negative"));
        }
        if !(non_negative(self.lambda_l1) && self.lambda_l1.is_finite()) {
            return Err(Error::invalid("lambda_l1", "must be non-negative and finite"));
        }
        if !(non_negative(self.lambda_l2) && self.lambda_l2.is_finite()) {
            return Err(Error::invalid("lambda_l2", "must be non-negative and finite"));
        }
        if self.n_rounds < 1 {
            return Err(Error::invalid("n_rounds", "must be at least 1"));
        }
        if !non_negative(self.min_sum_hessian_in_leaf) {
            return Err(Error::invalid("min_sum_hessian_in_leaf", "must be non-negative"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::invalid("max_depth", "must be at least 1 when set"));
        }
        Ok(())
    }

    pub(crate) fn bagging_enabled(&self) -> bool {
        self.bagging_freq > 0 && self.bagging_fraction < 1.0
    }
}
