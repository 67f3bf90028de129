//! Feature engineering: raw panel variables to a clean, lagged matrix plus
//! classification labels.
//!
//! Stages run in this order: [`convert_formats`] → [`clip_outliers`] →
//! [`impute`] → [`build_lags`] → [`correlation_dedupe_inputs`]. Labels come
//! straight from the raw panel via [`build_labels`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{Format, Key, StatementGroup};

mod clip;
mod convert;
mod dedupe;
mod fill;
mod labels;
mod lags;

pub use clip::{clip_outliers, DEFAULT_CAP_QUANTILE};
pub use convert::{convert_formats, ConvertedPanel, FormulaVariant};
pub use dedupe::{correlation_dedupe_inputs, DedupeOutcome, DroppedPair};
pub use fill::{
    fill_residuals, impute, select_fill_period, FillEntry, FillReport, ImputeConfig,
};
pub use labels::{build_labels, quantile_classes, Horizon, LabelScheme, LabelVector};
pub(crate) use labels::{classify_targets, validate_classes};
pub use lags::build_lags;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumnMeta {
    pub base_variable: String,
    pub format: Format,
    pub lag: u8,
    pub statement_group: StatementGroup,
    pub crucial: bool,
    /// Lower bound implied by clamping negative inputs to zero.
    pub floor: Option<f64>,
    /// Upper cap fitted by [`clip_outliers`], reused on out-of-sample rows.
    pub cap: Option<f64>,
}

impl FeatureColumnMeta {
    pub fn name(&self) -> String {
        format!("{}_{}_l{}", self.base_variable, self.format.as_str(), self.lag)
    }

    /// Financial-statement columns get a look-back history; macro and
    /// market columns do not.
    pub fn is_lagged(&self) -> bool {
        self.statement_group.is_financial()
    }

    pub fn is_clippable(&self) -> bool {
        self.format.is_growth() || self.format.is_ratio()
    }
}

/// Samples × features, column-major, with explicit Missing cells.
///
/// `retained` is the sample-deletion mask. Deleted rows stay in the matrix
/// until [`build_lags`] (or [`FeatureMatrix::drop_deleted_rows`]) so that
/// their values remain available as look-back history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    keys: Vec<Key>,
    columns: Vec<Vec<Option<f64>>>,
    metas: Vec<FeatureColumnMeta>,
    retained: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(
        keys: Vec<Key>,
        columns: Vec<Vec<Option<f64>>>,
        metas: Vec<FeatureColumnMeta>,
    ) -> Result<Self> {
        if columns.len() != metas.len() {
            return Err(Error::DimensionMismatch {
                expected: metas.len(),
                actual: columns.len(),
            });
        }
        if let Some(bad) = columns.iter().find(|c| c.len() != keys.len()) {
            return Err(Error::DimensionMismatch {
                expected: keys.len(),
                actual: bad.len(),
            });
        }
        for (i, a) in metas.iter().enumerate() {
            if metas[..i]
                .iter()
                .any(|b| b.base_variable == a.base_variable && b.format == a.format && b.lag == a.lag)
            {
                return Err(Error::DuplicateVariable(a.name()));
            }
        }
        let retained = alloc::vec![true; keys.len()];
        Ok(Self {
            keys,
            columns,
            metas,
            retained,
        })
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn columns(&self) -> &[Vec<Option<f64>>] {
        &self.columns
    }

    pub fn metas(&self) -> &[FeatureColumnMeta] {
        &self.metas
    }

    pub fn retained(&self) -> &[bool] {
        &self.retained
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn missing_count(&self) -> usize {
        self.columns
            .iter()
            .map(|c| c.iter().filter(|v| v.is_none()).count())
            .sum()
    }

    pub fn select_columns(&self, keep: &[usize]) -> Self {
        Self {
            keys: self.keys.clone(),
            columns: keep.iter().map(|&c| self.columns[c].clone()).collect(),
            metas: keep.iter().map(|&c| self.metas[c].clone()).collect(),
            retained: self.retained.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            keys: rows.iter().map(|&r| self.keys[r].clone()).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            metas: self.metas.clone(),
            retained: rows.iter().map(|&r| self.retained[r]).collect(),
        }
    }

    pub fn drop_deleted_rows(&self) -> Self {
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&r| self.retained[r]).collect();
        self.select_rows(&rows)
    }

    /// Dense row-major copy of the given rows. Missing cells become NaN.
    pub fn dense_rows(&self, rows: &[usize]) -> crate::linalg::Matrix {
        let mut m = crate::linalg::Matrix::zeros(rows.len(), self.n_cols());
        for (c, col) in self.columns.iter().enumerate() {
            for (i, &r) in rows.iter().enumerate() {
                m[(i, c)] = col[r].unwrap_or(f64::NAN);
            }
        }
        m
    }

    pub(crate) fn parts_mut(
        &mut self,
    ) -> (&mut Vec<Vec<Option<f64>>>, &mut Vec<FeatureColumnMeta>, &mut Vec<bool>) {
        (&mut self.columns, &mut self.metas, &mut self.retained)
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use crate::quarter::CalendarQuarter;
    use alloc::string::ToString;
    use alloc::vec;

    pub fn meta(base: &str, format: Format) -> FeatureColumnMeta {
        FeatureColumnMeta {
            base_variable: base.into(),
            format,
            lag: 0,
            statement_group: StatementGroup::Income,
            crucial: false,
            floor: None,
            cap: None,
        }
    }

    /// One company with consecutive quarters starting 2000Q1.
    pub fn single_company(columns: Vec<(FeatureColumnMeta, Vec<Option<f64>>)>) -> FeatureMatrix {
        let n = columns.first().map_or(0, |c| c.1.len());
        let keys = (0..n)
            .map(|t| ("A".to_string(), CalendarQuarter::new(2000, 1).unwrap().offset(t as i64)))
            .collect();
        let (metas, cols): (Vec<_>, Vec<_>) = columns.into_iter().unzip();
        FeatureMatrix::new(keys, cols, metas).unwrap()
    }

    #[test]
    fn duplicate_meta_rejected() {
        let err = FeatureMatrix::new(
            vec![],
            vec![vec![], vec![]],
            vec![meta("x", Format::QoQ), meta("x", Format::QoQ)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateVariable(_)));
    }
}
