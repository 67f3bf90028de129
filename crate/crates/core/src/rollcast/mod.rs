//! Rolling walk-forward evaluation: one model per subset of consecutive
//! training quarters, tested on the quarter that follows.

mod consensus;
mod importance;
mod metrics;
mod report;

pub use consensus::{consensus_classes, ConsensusLabels, ConsensusRow, ConsensusStat, ConsensusTable};
pub use importance::{
    decompose_importance, lag_bucket, BucketTally, ComponentContribution, ImportanceDecomposition, LoadingEntry,
    LAG_BUCKETS,
};
pub use metrics::{conditional_accuracy, conditional_accuracy_paired, ConditionalAccuracy, MetricsBundle};
pub use report::{aggregate_report, ConfigSummary, Report, SubsetSummary};

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    build_labels, build_lags, clip_outliers, convert_formats, correlation_dedupe_inputs, impute, ConvertedPanel,
    FillReport, FormulaVariant, Horizon, ImputeConfig, LabelScheme, LabelVector, DEFAULT_CAP_QUANTILE,
};
use crate::gbdt::{bin_features, fit_with_validation, BinnedMatrix, GbdtModel, HyperParams, ImportanceKind};
use crate::panel::{apply_sample_filters, shift_forward_aligned, Denominators, FilterRules, Key, RawPanel};
use crate::pca::{fit_pca, PcaModel};
use crate::quarter::CalendarQuarter;
use crate::tuner::{
    make_validation_split, search, trial_seed, SearchMode, SearchOptions, SearchSpace, TrialEval, TrialRecord,
    ValidationMode,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusPairing {
    /// Model scored on GAAP labels, consensus on non-GAAP outcomes.
    #[default]
    SplitActuals,
    /// Both scored on the non-GAAP outcome.
    SharedActual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub size: usize,
    pub mode: ValidationMode,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            size: 8,
            mode: ValidationMode::ChronologicalTail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub space: SearchSpace,
    pub budget: usize,
    pub mode: SearchMode,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            space: SearchSpace::default(),
            budget: 25,
            mode: SearchMode::Random,
            seed: 0,
        }
    }
}

/// Every protocol knob of a backtest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub horizon: Horizon,
    pub n_classes: u32,
    pub label_scheme: LabelScheme,
    pub train_len: usize,
    pub n_lags: usize,
    pub denominators: Denominators,
    pub formula_variant: FormulaVariant,
    pub filters: FilterRules,
    pub cap_quantile: f64,
    pub impute: ImputeConfig,
    pub correlation_cutoff: f64,
    pub pca_threshold: f64,
    pub standardize: bool,
    pub validation: ValidationConfig,
    pub search: SearchConfig,
    /// Base parameters; searched fields are overwritten per trial.
    pub gbdt: HyperParams,
    pub importance_kind: ImportanceKind,
    pub top_components: usize,
    pub top_variables: usize,
    pub consensus_stat: ConsensusStat,
    pub consensus_pairing: ConsensusPairing,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            horizon: Horizon::QoQ,
            n_classes: 3,
            label_scheme: LabelScheme::QuantileRank,
            train_len: 80,
            n_lags: 20,
            denominators: Denominators::default(),
            formula_variant: FormulaVariant::Standard,
            filters: FilterRules::default(),
            cap_quantile: DEFAULT_CAP_QUANTILE,
            impute: ImputeConfig::default(),
            correlation_cutoff: 0.9,
            pca_threshold: 0.66,
            standardize: false,
            validation: ValidationConfig::default(),
            search: SearchConfig::default(),
            gbdt: HyperParams::default(),
            importance_kind: ImportanceKind::SplitCount,
            top_components: 5,
            top_variables: 10,
            consensus_stat: ConsensusStat::Mean,
            consensus_pairing: ConsensusPairing::SplitActuals,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_len < 2 {
            return Err(Error::invalid("train_len", "must be at least 2"));
        }
        if self.n_lags == 0 || self.n_lags > u8::MAX as usize {
            return Err(Error::invalid("n_lags", "must lie in 1..=255"));
        }
        if !(self.cap_quantile > 0.0 && self.cap_quantile <= 1.0) {
            return Err(Error::invalid("cap_quantile", "must lie in (0, 1]"));
        }
        if !(self.correlation_cutoff > 0.0 && self.correlation_cutoff <= 1.0) {
            return Err(Error::invalid("correlation_cutoff", "must lie in (0, 1]"));
        }
        if !(self.pca_threshold > 0.0 && self.pca_threshold <= 1.0) {
            return Err(Error::invalid("pca_threshold", "must lie in (0, 1]"));
        }
        if self.validation.size == 0 {
            return Err(Error::invalid("validation.size", "must be at least 1"));
        }
        if self.search.budget == 0 {
            return Err(Error::invalid("search.budget", "must be at least 1"));
        }
        if self.top_components == 0 || self.top_variables == 0 {
            return Err(Error::invalid("top_components", "importance tallies need at least one entry"));
        }
        crate::features::validate_classes(self.n_classes, self.label_scheme)?;
        self.search.space.validate()?;
        self.gbdt.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSplit {
    /// 1-based.
    pub index: usize,
    pub train_quarters: Vec<CalendarQuarter>,
    pub test_quarter: CalendarQuarter,
}

impl SubsetSplit {
    pub fn train_start(&self) -> CalendarQuarter {
        self.train_quarters[0]
    }

    pub fn train_end(&self) -> CalendarQuarter {
        *self.train_quarters.last().expect("train window is non-empty")
    }
}

/// One split per feasible test quarter, sliding by one quarter.
pub fn enumerate_subsets(quarters: &[CalendarQuarter], train_len: usize) -> Result<Vec<SubsetSplit>> {
    if train_len == 0 {
        return Err(Error::invalid("train_len", "must be positive"));
    }
    if quarters.windows(2).any(|w| w[1] != w[0].succ()) {
        return Err(Error::invalid("quarters", "must be consecutive"));
    }
    if quarters.len() < train_len + 1 {
        return Err(Error::InsufficientHistory {
            available: quarters.len(),
            required: train_len + 1,
        });
    }
    Ok((train_len..quarters.len())
        .enumerate()
        .map(|(i, t)| SubsetSplit {
            index: i + 1,
            train_quarters: quarters[t - train_len..t].to_vec(),
            test_quarter: quarters[t],
        })
        .collect())
}

/// Panel-wide products computed once: converted features, GAAP labels and
/// the optional consensus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub converted: ConvertedPanel,
    pub labels: LabelVector,
    pub consensus: Option<ConsensusLabels>,
}

impl PreparedData {
    /// Every calendar quarter from the first to the last key.
    pub fn quarters(&self) -> Vec<CalendarQuarter> {
        let set: BTreeSet<CalendarQuarter> = self.labels.keys.iter().map(|(_, q)| *q).collect();
        match (set.first(), set.last()) {
            (Some(&a), Some(&b)) => (0..=b.diff(a)).map(|k| a.offset(k)).collect(),
            _ => Vec::new(),
        }
    }
}

/// Aligns, filters, converts and labels a raw panel.
pub fn prepare(panel: &RawPanel, consensus: Option<&ConsensusTable>, cfg: &BacktestConfig) -> Result<PreparedData> {
    cfg.validate()?;
    let panel = apply_sample_filters(&shift_forward_aligned(panel), &cfg.filters);
    if panel.is_empty() {
        return Err(Error::InsufficientData("no samples survive the filters".into()));
    }
    let converted = convert_formats(&panel, &cfg.denominators, cfg.formula_variant)?;
    let labels = build_labels(&panel, &cfg.denominators, cfg.horizon, cfg.n_classes, cfg.label_scheme)?;
    let consensus = consensus
        .map(|t| {
            consensus_classes(
                t,
                &panel,
                &cfg.denominators,
                cfg.horizon,
                cfg.n_classes,
                cfg.label_scheme,
                cfg.consensus_stat,
            )
        })
        .transpose()?;
    Ok(PreparedData {
        converted,
        labels,
        consensus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub split: SubsetSplit,
    pub tuned: HyperParams,
    pub best_trial: usize,
    pub best_validation_accuracy: f64,
    pub n_train: usize,
    pub n_features: usize,
    pub n_features_kept: usize,
    pub pca_kept: usize,
    pub test_keys: Vec<Key>,
    pub predictions: Vec<u32>,
    pub actual: Vec<Option<u32>>,
    pub metrics: MetricsBundle,
    pub importance: ImportanceDecomposition,
    pub trials: Vec<TrialRecord>,
    pub fill_report: FillReport,
    pub pca: PcaModel,
    pub model: GbdtModel,
}

fn accuracy(predicted: &[u32], actual: &[u32]) -> f64 {
    if actual.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(actual).filter(|(p, a)| p == a).count() as f64 / actual.len() as f64
}

/// Seed for everything random inside subset `index`.
pub fn subset_seed(seed: u64, index: usize) -> u64 {
    trial_seed(seed ^ 0x05EE_D0F5_B5E7, index)
}

/// Runs the full protocol on one split. Every statistic (caps, fill
/// periods, deleted columns, correlations, PCA, bins, hyperparameters) is
/// fitted on the training window only. Training rows whose label reaches
/// into the test quarter or later are left out.
///
/// `clock` only feeds trial wall times.
pub fn run_subset(
    split: &SubsetSplit,
    data: &PreparedData,
    cfg: &BacktestConfig,
    clock: &dyn Fn() -> f64,
) -> Result<SubsetResult> {
    run_subset_inner(split, data, cfg, clock).map_err(|e| e.in_subset(split.index))
}

fn run_subset_inner(
    split: &SubsetSplit,
    data: &PreparedData,
    cfg: &BacktestConfig,
    clock: &dyn Fn() -> f64,
) -> Result<SubsetResult> {
    let (first, last, test_q) = (split.train_start(), split.train_end(), split.test_quarter);
    let seed = subset_seed(cfg.search.seed, split.index);
    let conv = &data.converted;

    // Rows up to the test quarter; later rows never enter the subset.
    let upto: Vec<usize> = (0..conv.matrix.n_rows())
        .filter(|&r| conv.matrix.keys()[r].1 <= test_q)
        .collect();
    let m = conv.matrix.select_rows(&upto);
    let origin: Vec<Vec<bool>> = conv
        .positive_origin
        .iter()
        .map(|c| upto.iter().map(|&r| c[r]).collect())
        .collect();
    let crucial: Vec<bool> = upto.iter().map(|&r| conv.crucial_present[r]).collect();
    let fit: Vec<bool> = m.keys().iter().map(|(_, q)| *q >= first && *q <= last).collect();

    let clipped = clip_outliers(&m, Some(&origin), Some(&fit), cfg.cap_quantile);
    let (mut imputed, fill_report) = impute(&clipped, &cfg.impute, Some(&crucial), Some(&fit));
    {
        // Earlier rows stay as lag history only.
        let keys: Vec<CalendarQuarter> = imputed.keys().iter().map(|(_, q)| *q).collect();
        let (_, _, retained) = imputed.parts_mut();
        for (keep, q) in retained.iter_mut().zip(keys) {
            *keep &= q >= first;
        }
    }
    let lagged = build_lags(&imputed, cfg.n_lags);

    let ahead = cfg.horizon.quarters_ahead();
    let mut train = Vec::new();
    let mut y_train = Vec::new();
    let mut test = Vec::new();
    for (r, key) in lagged.keys().iter().enumerate() {
        let q = key.1;
        if q == test_q {
            test.push(r);
        } else if q <= last && q.offset(ahead) < test_q {
            if let Some(y) = data.labels.lookup(key) {
                train.push(r);
                y_train.push(y);
            }
        }
    }
    if train.is_empty() {
        return Err(Error::InsufficientData(format!("no labelled training rows before {test_q}")));
    }

    let deduped = correlation_dedupe_inputs(&lagged, cfg.correlation_cutoff, Some(&train)).matrix;
    let x_train = deduped.dense_rows(&train);
    let pca = fit_pca(&x_train, cfg.standardize)?.select_components(cfg.pca_threshold)?;
    let z_train = pca.transform(&x_train)?;
    let z_test = pca.transform(&deduped.dense_rows(&test))?;

    let train_keys: Vec<Key> = train.iter().map(|&r| lagged.keys()[r].clone()).collect();
    let (fit_idx, val_idx) = make_validation_split(&train_keys, cfg.validation.size, cfg.validation.mode, seed)?;
    let z_fit = z_train.select_rows(&fit_idx);
    let z_val = z_train.select_rows(&val_idx);
    let y_fit: Vec<u32> = fit_idx.iter().map(|&i| y_train[i]).collect();
    let y_val: Vec<u32> = val_idx.iter().map(|&i| y_train[i]).collect();
    let k = cfg.n_classes as usize;

    let objective = |p: &HyperParams| -> Result<TrialEval> {
        let binned = bin_features(&z_fit, p.max_bin)?;
        let valid = BinnedMatrix::apply(&binned.mappers, &z_val)?;
        let (model, report) = fit_with_validation(&binned, &y_fit, k, p, Some((&valid, &y_val)))?;
        Ok(TrialEval {
            validation_metric: accuracy(&model.predict_class(&valid)?, &y_val),
            train_metric: accuracy(&model.predict_class(&binned)?, &y_fit),
            best_rounds: report.best_rounds,
        })
    };
    let options = SearchOptions {
        budget: cfg.search.budget,
        mode: cfg.search.mode,
        seed,
    };
    let outcome = search(&cfg.search.space, &cfg.gbdt, options, objective, clock)?;

    // Refit on the whole window with the winning trial's round count.
    let mut tuned = outcome.best.clone();
    tuned.n_rounds = outcome.best_eval.best_rounds.max(1);
    tuned.early_stopping_rounds = None;
    let binned = bin_features(&z_train, tuned.max_bin)?;
    let (mut model, _) = fit_with_validation(&binned, &y_train, k, &tuned, None)?;
    model.truncate_rounds(outcome.best_eval.best_rounds);
    tuned.n_rounds = model.trees.len();

    let test_binned = BinnedMatrix::apply(&model.mappers, &z_test)?;
    let predictions = model.predict_class(&test_binned)?;
    let test_keys: Vec<Key> = test.iter().map(|&r| lagged.keys()[r].clone()).collect();
    let actual: Vec<Option<u32>> = test_keys.iter().map(|key| data.labels.lookup(key)).collect();
    let mut metrics = MetricsBundle::new(&predictions, &actual, cfg.n_classes);
    metrics.consensus = data.consensus.as_ref().and_then(|cons| {
        let mut rows = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for ((key, &p), a) in test_keys.iter().zip(&predictions).zip(&actual) {
            let Some((c, nongaap)) = cons.lookup(key) else { continue };
            let model_actual = match cfg.consensus_pairing {
                ConsensusPairing::SharedActual => nongaap,
                ConsensusPairing::SplitActuals => match a {
                    Some(a) => *a,
                    None => continue,
                },
            };
            rows.0.push(p);
            rows.1.push(c);
            rows.2.push(model_actual);
            rows.3.push(nongaap);
        }
        (!rows.0.is_empty()).then(|| conditional_accuracy_paired(&rows.0, &rows.1, &rows.2, &rows.3))
    });

    let importance = decompose_importance(
        &model.feature_importance(cfg.importance_kind),
        &pca,
        deduped.metas(),
        cfg.top_components,
        cfg.top_variables,
    );

    Ok(SubsetResult {
        split: split.clone(),
        tuned,
        best_trial: outcome.best_index,
        best_validation_accuracy: outcome.best_eval.validation_metric,
        n_train: train.len(),
        n_features: lagged.n_cols(),
        n_features_kept: deduped.n_cols(),
        pca_kept: pca.kept,
        test_keys,
        predictions,
        actual,
        metrics,
        importance,
        trials: outcome.trials,
        fill_report,
        pca,
        model,
    })
}
