use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{classify_targets, validate_classes, Horizon, LabelScheme};
use crate::panel::{schema_index, Denominators, Key, RawPanel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsensusRow {
    /// Analyst forecast of this quarter's earnings.
    pub consensus_mean: Option<f64>,
    pub consensus_median: Option<f64>,
    pub actual_nongaap: Option<f64>,
}

/// Analyst estimates and non-GAAP actuals keyed by (company, quarter).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsensusTable {
    rows: BTreeMap<Key, ConsensusRow>,
}

impl ConsensusTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a row; a key seen before is an error.
    pub fn try_insert(&mut self, key: Key, row: ConsensusRow) -> Result<()> {
        if self.rows.contains_key(&key) {
            return Err(Error::DuplicateKey {
                company: key.0,
                quarter: key.1.to_string(),
            });
        }
        self.rows.insert(key, row);
        Ok(())
    }

    pub(crate) fn insert(&mut self, key: Key, row: ConsensusRow) {
        self.rows.insert(key, row);
    }

    pub fn get(&self, key: &Key) -> Option<&ConsensusRow> {
        self.rows.get(key)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &ConsensusRow)> {
        self.rows.iter()
    }
}

impl FromIterator<(Key, ConsensusRow)> for ConsensusTable {
    fn from_iter<I: IntoIterator<Item = (Key, ConsensusRow)>>(iter: I) -> Self {
        Self {
            rows: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusStat {
    #[default]
    Mean,
    Median,
}

/// Classes for the analyst forecast and for the non-GAAP outcome, aligned
/// with the panel keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusLabels {
    pub keys: Vec<Key>,
    pub consensus: Vec<Option<u32>>,
    pub actual: Vec<Option<u32>>,
    /// Panel rows with a label-eligible asset value but an incomplete
    /// consensus or actual window.
    pub skipped: usize,
}

impl ConsensusLabels {
    pub fn lookup(&self, key: &Key) -> Option<(u32, u32)> {
        let i = self.keys.binary_search(key).ok()?;
        Some((self.consensus[i]?, self.actual[i]?))
    }

    pub fn is_empty(&self) -> bool {
        self.consensus.iter().zip(&self.actual).all(|(c, a)| c.is_none() || a.is_none())
    }
}

/// Cuts consensus forecasts and non-GAAP actuals with the same target
/// definition and per-quarter quantile scheme as the GAAP labels.
///
/// QoQ: forecast target `(C[T+1] - N[T]) / A[T]` against actual
/// `(N[T+1] - N[T]) / A[T]`, where `C` is the consensus and `N` the
/// non-GAAP actual. YoY sums four quarters on each side.
pub fn consensus_classes(
    table: &ConsensusTable,
    panel: &RawPanel,
    denominators: &Denominators,
    horizon: Horizon,
    n_classes: u32,
    scheme: LabelScheme,
    stat: ConsensusStat,
) -> Result<ConsensusLabels> {
    validate_classes(n_classes, scheme)?;
    let at = schema_index(panel.schema(), &denominators.assets)
        .ok_or_else(|| Error::MissingDenominator(denominators.assets.clone()))?;
    let keys = panel.keys();
    let field = |key: &Key, forecast: bool| -> Option<f64> {
        let row = table.get(key)?;
        match (forecast, stat) {
            (false, _) => row.actual_nongaap,
            (true, ConsensusStat::Mean) => row.consensus_mean,
            (true, ConsensusStat::Median) => row.consensus_median,
        }
    };
    let window = |key: &Key, range: core::ops::RangeInclusive<i64>, forecast: bool| -> Option<f64> {
        range.map(|k| field(&(key.0.clone(), key.1.offset(k)), forecast)).sum()
    };
    let (ahead, behind) = match horizon {
        Horizon::QoQ => (1..=1, 0..=0),
        Horizon::YoY => (1..=4, -3..=0),
    };
    let mut skipped = 0;
    let mut forecast_targets = Vec::with_capacity(keys.len());
    let mut actual_targets = Vec::with_capacity(keys.len());
    for (row, key) in keys.iter().enumerate() {
        let Some(assets) = panel.columns()[at][row].filter(|a| *a > 0.0) else {
            forecast_targets.push(None);
            actual_targets.push(None);
            continue;
        };
        let base = window(key, behind.clone(), false);
        let f = base.zip(window(key, ahead.clone(), true)).map(|(b, c)| (c - b) / assets);
        let a = base.zip(window(key, ahead.clone(), false)).map(|(b, n)| (n - b) / assets);
        if f.is_none() || a.is_none() {
            skipped += 1;
        }
        // Both sides are cut on the same sample so the classes compare.
        let both = f.is_some() && a.is_some();
        forecast_targets.push(f.filter(|_| both));
        actual_targets.push(a.filter(|_| both));
    }
    Ok(ConsensusLabels {
        keys: keys.to_vec(),
        consensus: classify_targets(keys, &forecast_targets, n_classes, scheme),
        actual: classify_targets(keys, &actual_targets, n_classes, scheme),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{StatementGroup, VariableSpec};
    use crate::quarter::CalendarQuarter;
    use alloc::format;
    use alloc::string::String;
    use alloc::vec;

    fn setup(actual_next: &[f64], forecast_next: &[f64]) -> (ConsensusTable, RawPanel) {
        let d = Denominators::default();
        let schema = vec![VariableSpec::from_flags("atq", StatementGroup::Balance, false, false, false, false, true, false, &d)];
        let q0 = CalendarQuarter::new(2008, 1).unwrap();
        let names: Vec<String> = (0..actual_next.len()).map(|i| format!("c{i}")).collect();
        let obs: Vec<_> = names.iter().map(|n| (n.as_str(), q0, "atq", Some(1.0))).collect();
        let panel = RawPanel::from_observations(schema, obs).unwrap();
        let mut table = ConsensusTable::new();
        for (i, n) in names.iter().enumerate() {
            table.try_insert((n.clone(), q0), ConsensusRow { consensus_mean: None, consensus_median: None, actual_nongaap: Some(0.0) }).unwrap();
            let f = Some(forecast_next[i]);
            table
                .try_insert((n.clone(), q0.succ()), ConsensusRow { consensus_mean: f, consensus_median: f, actual_nongaap: Some(actual_next[i]) })
                .unwrap();
        }
        (table, panel)
    }

    fn accuracy(l: &ConsensusLabels) -> f64 {
        let pairs: Vec<_> = l.consensus.iter().zip(&l.actual).filter_map(|(c, a)| Some((c.as_ref()?, a.as_ref()?))).collect();
        pairs.iter().filter(|(c, a)| c == a).count() as f64 / pairs.len() as f64
    }

    #[test]
    fn perfect_consensus() {
        let v: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let (t, p) = setup(&v, &v);
        let l = consensus_classes(&t, &p, &Denominators::default(), Horizon::QoQ, 3, LabelScheme::QuantileRank, ConsensusStat::Mean).unwrap();
        assert_eq!(accuracy(&l), 1.0);
        assert_eq!(l.skipped, 0);
    }

    #[test]
    fn reversed_consensus_keeps_middle_class() {
        let v: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let r: Vec<f64> = v.iter().rev().copied().collect();
        let (t, p) = setup(&v, &r);
        let l = consensus_classes(&t, &p, &Denominators::default(), Horizon::QoQ, 3, LabelScheme::QuantileRank, ConsensusStat::Median).unwrap();
        assert!((accuracy(&l) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_table_yields_no_pairs() {
        let (_, p) = setup(&[1.0, 2.0], &[1.0, 2.0]);
        let l = consensus_classes(&ConsensusTable::new(), &p, &Denominators::default(), Horizon::QoQ, 2, LabelScheme::QuantileRank, ConsensusStat::Mean).unwrap();
        assert!(l.is_empty());
        assert_eq!(l.skipped, 2);
    }

    #[test]
    fn duplicate_key_rejected() {
        let mut t = ConsensusTable::new();
        let k = (String::from("a"), CalendarQuarter::new(2000, 1).unwrap());
        t.try_insert(k.clone(), ConsensusRow::default()).unwrap();
        assert!(matches!(t.try_insert(k, ConsensusRow::default()), Err(Error::DuplicateKey { .. })));
    }
}
