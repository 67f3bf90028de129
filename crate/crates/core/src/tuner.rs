//! Hold-out validation splits and hyperparameter search over a box.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::HyperParams;
use crate::panel::Key;
use crate::quarter::CalendarQuarter;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// The last quarters of the window, wholesale.
    #[default]
    ChronologicalTail,
    /// Distinct quarters drawn uniformly without replacement.
    RandomQuarters,
}

/// Splits row indices into (train, validation) by calendar quarter. Every
/// row of a validation quarter goes to validation.
pub fn make_validation_split(
    keys: &[Key],
    size_quarters: usize,
    mode: ValidationMode,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if size_quarters == 0 {
        return Err(Error::invalid("size_quarters", "must be at least 1"));
    }
    let quarters: Vec<CalendarQuarter> = keys
        .iter()
        .map(|(_, q)| *q)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if quarters.len() < size_quarters + 1 {
        return Err(Error::WindowTooSmall {
            available: quarters.len(),
            required: size_quarters + 1,
        });
    }
    let chosen: BTreeSet<CalendarQuarter> = match mode {
        ValidationMode::ChronologicalTail => quarters[quarters.len() - size_quarters..].iter().copied().collect(),
        ValidationMode::RandomQuarters => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample(&mut rng, quarters.len(), size_quarters)
                .into_iter()
                .map(|i| quarters[i])
                .collect()
        }
    };
    Ok((0..keys.len()).partition(|&i| !chosen.contains(&keys[i].1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
    pub scale: Scale,
}

impl ParamRange {
    pub const fn new(min: f64, max: f64, scale: Scale) -> Self {
        Self { min, max, scale }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.min <= self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::invalid(name, "range needs finite min <= max"));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(Error::invalid(name, "log scale needs a positive minimum"));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.min == self.max {
            return self.min;
        }
        match self.scale {
            Scale::Linear => rng.random_range(self.min..=self.max),
            Scale::Log => libm::exp(rng.random_range(libm::log(self.min)..=libm::log(self.max))),
            Scale::Integer => {
                let lo = libm::ceil(self.min) as i64;
                let hi = libm::floor(self.max) as i64;
                rng.random_range(lo..=hi.max(lo)) as f64
            }
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max && (self.scale != Scale::Integer || libm::fmod(v, 1.0) == 0.0)
    }
}

/// Tunable hyperparameters; `None` keeps the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub learning_rate: Option<ParamRange>,
    pub max_bin: Option<ParamRange>,
    pub num_leaves: Option<ParamRange>,
    pub min_data_in_leaf: Option<ParamRange>,
    pub feature_fraction: Option<ParamRange>,
    pub bagging_fraction: Option<ParamRange>,
    pub bagging_freq: Option<ParamRange>,
    pub min_gain_to_split: Option<ParamRange>,
    pub lambda_l1: Option<ParamRange>,
    pub lambda_l2: Option<ParamRange>,
}

impl Default for SearchSpace {
    /// Default search box.
    fn default() -> Self {
        use Scale::*;
        Self {
            learning_rate: Some(ParamRange::new(0.6, 1.0, Linear)),
            max_bin: Some(ParamRange::new(127.0, 255.0, Integer)),
            num_leaves: Some(ParamRange::new(50.0, 200.0, Integer)),
            min_data_in_leaf: Some(ParamRange::new(500.0, 1400.0, Integer)),
            feature_fraction: Some(ParamRange::new(0.3, 0.8, Linear)),
            bagging_fraction: Some(ParamRange::new(0.4, 0.8, Linear)),
            bagging_freq: Some(ParamRange::new(2.0, 8.0, Integer)),
            min_gain_to_split: Some(ParamRange::new(0.5, 0.72, Linear)),
            lambda_l1: Some(ParamRange::new(1.0, 20.0, Linear)),
            lambda_l2: Some(ParamRange::new(350.0, 450.0, Linear)),
        }
    }
}

type Accessor = (&'static str, fn(&SearchSpace) -> Option<ParamRange>, fn(&mut SearchSpace) -> &mut Option<ParamRange>, fn(&mut HyperParams, f64), fn(&HyperParams) -> f64);

const FIELDS: [Accessor; 10] = [
    ("learning_rate", |s| s.learning_rate, |s| &mut s.learning_rate, |p, v| p.learning_rate = v, |p| p.learning_rate),
    ("max_bin", |s| s.max_bin, |s| &mut s.max_bin, |p, v| p.max_bin = v as usize, |p| p.max_bin as f64),
    ("num_leaves", |s| s.num_leaves, |s| &mut s.num_leaves, |p, v| p.num_leaves = v as usize, |p| p.num_leaves as f64),
    ("min_data_in_leaf", |s| s.min_data_in_leaf, |s| &mut s.min_data_in_leaf, |p, v| p.min_data_in_leaf = v as usize, |p| p.min_data_in_leaf as f64),
    ("feature_fraction", |s| s.feature_fraction, |s| &mut s.feature_fraction, |p, v| p.feature_fraction = v, |p| p.feature_fraction),
    ("bagging_fraction", |s| s.bagging_fraction, |s| &mut s.bagging_fraction, |p, v| p.bagging_fraction = v, |p| p.bagging_fraction),
    ("bagging_freq", |s| s.bagging_freq, |s| &mut s.bagging_freq, |p, v| p.bagging_freq = v as usize, |p| p.bagging_freq as f64),
    ("min_gain_to_split", |s| s.min_gain_to_split, |s| &mut s.min_gain_to_split, |p, v| p.min_gain_to_split = v, |p| p.min_gain_to_split),
    ("lambda_l1", |s| s.lambda_l1, |s| &mut s.lambda_l1, |p, v| p.lambda_l1 = v, |p| p.lambda_l1),
    ("lambda_l2", |s| s.lambda_l2, |s| &mut s.lambda_l2, |p, v| p.lambda_l2 = v, |p| p.lambda_l2),
];

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        for (name, get, ..) in FIELDS {
            if let Some(r) = get(self) {
                r.validate(name)?;
            }
        }
        Ok(())
    }

    pub fn sample(&self, base: &HyperParams, rng: &mut impl Rng) -> HyperParams {
        let mut p = base.clone();
        for (_, get, _, set, _) in FIELDS {
            if let Some(r) = get(self) {
                set(&mut p, r.sample(rng));
            }
        }
        p
    }

    pub fn contains(&self, p: &HyperParams) -> bool {
        FIELDS
            .iter()
            .all(|(_, get, _, _, read)| get(self).is_none_or(|r| r.contains(read(p))))
    }

    /// Shrinks every range to the span of `params`, staying inside `self`.
    fn narrowed_to(&self, params: &[&HyperParams]) -> Self {
        let mut out = self.clone();
        for (_, get, slot, _, read) in FIELDS {
            if let Some(r) = get(self) {
                let lo = params.iter().map(|p| read(p)).fold(f64::INFINITY, f64::min);
                let hi = params.iter().map(|p| read(p)).fold(f64::NEG_INFINITY, f64::max);
                *slot(&mut out) = Some(ParamRange::new(lo.max(r.min), hi.min(r.max), r.scale));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Uniform sampling over the whole box.
    #[default]
    Random,
    /// First half uniform; second half inside the span of the first
    /// half's top quartile.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub budget: usize,
    pub mode: SearchMode,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: 25,
            mode: SearchMode::Random,
            seed: 0,
        }
    }
}

/// What an objective reports for one parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialEval {
    pub validation_metric: f64,
    pub train_metric: f64,
    /// Boosting rounds kept after early stopping.
    pub best_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub params: HyperParams,
    pub validation_metric: Option<f64>,
    pub train_metric: Option<f64>,
    pub best_rounds: Option<usize>,
    pub wall_time: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: HyperParams,
    pub best_index: usize,
    pub best_eval: TrialEval,
    pub trials: Vec<TrialRecord>,
}

/// Seed for trial `index`, independent of evaluation order.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Evaluates `options.budget` sampled parameter vectors and returns the one
/// with the highest validation metric (earliest on ties). Failed trials are
/// recorded and skipped; the search fails only if every trial does.
///
/// `clock` returns seconds and is only used for `wall_time`.
pub fn search<E, F>(
    space: &SearchSpace,
    base: &HyperParams,
    options: SearchOptions,
    mut objective: F,
    clock: &dyn Fn() -> f64,
) -> Result<SearchOutcome>
where
    E: ToString,
    F: FnMut(&HyperParams) -> core::result::Result<TrialEval, E>,
{
    space.validate()?;
    if options.budget == 0 {
        return Err(Error::invalid("budget", "must be at least 1"));
    }
    let first_phase = match options.mode {
        SearchMode::Random => options.budget,
        SearchMode::Adaptive => options.budget.div_ceil(2),
    };
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(options.budget);
    let mut evals: Vec<Option<TrialEval>> = Vec::with_capacity(options.budget);
    let mut active = space.clone();
    for index in 0..options.budget {
        if index == first_phase && index > 0 {
            let mut ok: Vec<(usize, f64)> = evals
                .iter()
                .enumerate()
                .filter_map(|(i, e)| e.map(|e| (i, e.validation_metric)))
                .collect();
            ok.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            if !ok.is_empty() {
                let top: Vec<&HyperParams> = ok[..ok.len().div_ceil(4)].iter().map(|(i, _)| &trials[*i].params).collect();
                active = space.narrowed_to(&top);
            }
        }
        let seed = trial_seed(options.seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = active.sample(base, &mut rng);
        params.seed = seed;
        let start = clock();
        let result = objective(&params);
        let wall_time = clock() - start;
        let (eval, error) = match result {
            Ok(e) => (Some(e), None),
            Err(e) => (None, Some(e.to_string())),
        };
        trials.push(TrialRecord {
            index,
            params,
            validation_metric: eval.map(|e| e.validation_metric),
            train_metric: eval.map(|e| e.train_metric),
            best_rounds: eval.map(|e| e.best_rounds),
            wall_time,
            error,
        });
        evals.push(eval);
    }
    let (best_index, best_eval) = evals
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|e| (i, e)))
        .fold(None, |best: Option<(usize, TrialEval)>, (i, e)| match best {
            Some((_, b)) if e.validation_metric <= b.validation_metric => best,
            _ => Some((i, e)),
        })
        .ok_or(Error::AllTrialsFailed(options.budget))?;
    Ok(SearchOutcome {
        best: trials[best_index].params.clone(),
        best_index,
        best_eval,
        trials,
    })
}

pub fn no_clock() -> f64 {
    0.0
}
