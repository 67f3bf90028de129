use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::importance::{BucketTally, ImportanceDecomposition};
use super::metrics::ConditionalAccuracy;
use super::SubsetResult;
use crate::error::{Error, Result};
use crate::features::{Horizon, LabelScheme};
use crate::gbdt::HyperParams;
use crate::quarter::CalendarQuarter;

/// One line of the machine-readable report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub index: usize,
    pub train_start: CalendarQuarter,
    pub train_end: CalendarQuarter,
    pub test_quarter: CalendarQuarter,
    pub horizon: Horizon,
    pub n_classes: u32,
    pub scheme: LabelScheme,
    pub n_train: usize,
    pub n_features: usize,
    pub n_features_kept: usize,
    pub pca_kept: usize,
    pub best_trial: usize,
    pub best_validation_accuracy: f64,
    pub tuned: HyperParams,
    pub metrics: super::MetricsBundle,
    pub importance: ImportanceDecomposition,
}

impl SubsetResult {
    pub fn summary(&self, horizon: Horizon, n_classes: u32, scheme: LabelScheme) -> SubsetSummary {
        SubsetSummary {
            index: self.split.index,
            train_start: self.split.train_start(),
            train_end: self.split.train_end(),
            test_quarter: self.split.test_quarter,
            horizon,
            n_classes,
            scheme,
            n_train: self.n_train,
            n_features: self.n_features,
            n_features_kept: self.n_features_kept,
            pca_kept: self.pca_kept,
            best_trial: self.best_trial,
            best_validation_accuracy: self.best_validation_accuracy,
            tuned: self.tuned.clone(),
            metrics: self.metrics.clone(),
            importance: self.importance.clone(),
        }
    }
}

/// Results of one (horizon, class count, scheme) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub horizon: Horizon,
    pub n_classes: u32,
    pub scheme: LabelScheme,
    pub n_subsets: usize,
    /// Mean over subsets that had labelled test rows.
    pub mean_accuracy: Option<f64>,
    pub accuracy_series: Vec<(CalendarQuarter, Option<f64>)>,
    /// Counts pooled over subsets; absent without consensus data.
    pub conditional: Option<ConditionalAccuracy>,
    pub tallies: Vec<BucketTally>,
    /// Base variables by how often they made a component's top list.
    pub variable_mentions: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub configurations: Vec<ConfigSummary>,
}

fn scheme_rank(s: LabelScheme) -> u8 {
    match s {
        LabelScheme::QuantileRank => 0,
        LabelScheme::Sign => 1,
    }
}

fn horizon_rank(h: Horizon) -> u8 {
    match h {
        Horizon::QoQ => 0,
        Horizon::YoY => 1,
    }
}

/// Folds subset records into per-configuration summaries, ordered by
/// scheme, horizon and class count; subsets within a configuration are
/// ordered by test quarter.
pub fn aggregate_report(summaries: &[SubsetSummary]) -> Result<Report> {
    if summaries.is_empty() {
        return Err(Error::InsufficientData("no subset records".into()));
    }
    let mut groups: BTreeMap<(u8, u8, u32), Vec<&SubsetSummary>> = BTreeMap::new();
    for s in summaries {
        groups
            .entry((scheme_rank(s.scheme), horizon_rank(s.horizon), s.n_classes))
            .or_default()
            .push(s);
    }
    let configurations = groups
        .into_values()
        .map(|mut subs| {
            subs.sort_by_key(|s| (s.test_quarter, s.index));
            let accs: Vec<f64> = subs.iter().filter_map(|s| s.metrics.accuracy).collect();
            let mean_accuracy = (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64);
            let conditional = subs
                .iter()
                .filter_map(|s| s.metrics.consensus)
                .reduce(|a, b| a.merge(&b));
            let mut tallies = Vec::new();
            let mut mentions: BTreeMap<String, usize> = BTreeMap::new();
            for s in &subs {
                ImportanceDecomposition::merge_tallies(&mut tallies, &s.importance.tallies);
                for e in s.importance.components.iter().flat_map(|c| &c.top_variables) {
                    *mentions.entry(e.base_variable.clone()).or_default() += 1;
                }
            }
            let mut variable_mentions: Vec<(String, usize)> = mentions.into_iter().collect();
            variable_mentions.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ConfigSummary {
                horizon: subs[0].horizon,
                n_classes: subs[0].n_classes,
                scheme: subs[0].scheme,
                n_subsets: subs.len(),
                mean_accuracy,
                accuracy_series: subs.iter().map(|s| (s.test_quarter, s.metrics.accuracy)).collect(),
                conditional,
                tallies,
                variable_mentions,
            }
        })
        .collect();
    Ok(Report { configurations })
}
