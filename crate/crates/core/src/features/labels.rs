use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{schema_index, Denominators, Key, RawPanel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Horizon {
    QoQ,
    YoY,
}

impl Horizon {
    /// Future quarters of income entering the target.
    pub fn quarters_ahead(self) -> i64 {
        match self {
            Horizon::QoQ => 1,
            Horizon::YoY => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Horizon::QoQ => "QoQ",
            Horizon::YoY => "YoY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    /// Equal-count classes by rank within each calendar quarter.
    QuantileRank,
    /// 1 when the target is strictly positive, else 0.
    Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    pub keys: Vec<Key>,
    pub values: Vec<Option<u32>>,
    pub targets: Vec<Option<f64>>,
    pub n_classes: u32,
    pub horizon: Horizon,
    pub scheme: LabelScheme,
}

impl LabelVector {
    pub fn lookup(&self, key: &Key) -> Option<u32> {
        let i = self.keys.binary_search(key).ok()?;
        self.values[i]
    }
}

pub(crate) fn validate_classes(n_classes: u32, scheme: LabelScheme) -> Result<()> {
    if n_classes < 2 {
        return Err(Error::invalid("n_classes", "must be at least 2"));
    }
    if scheme == LabelScheme::Sign && n_classes != 2 {
        return Err(Error::invalid("n_classes", "the sign scheme has exactly 2 classes"));
    }
    Ok(())
}

/// Equal-count rank classes: entries are ordered by (value, tie-break id)
/// with a stable sort and rank `r` of `n` maps to class `r * k / n`.
pub fn quantile_classes(entries: &[(f64, &str)], n_classes: u32) -> Vec<u32> {
    let n = entries.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        entries[a]
            .0
            .total_cmp(&entries[b].0)
            .then_with(|| entries[a].1.cmp(entries[b].1))
    });
    let mut classes = alloc::vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        classes[i] = (rank as u64 * u64::from(n_classes) / n as u64) as u32;
    }
    classes
}

/// Classes cut per calendar quarter from per-key targets.
pub(crate) fn classify_targets(
    keys: &[Key],
    targets: &[Option<f64>],
    n_classes: u32,
    scheme: LabelScheme,
) -> Vec<Option<u32>> {
    let mut values = alloc::vec![None; keys.len()];
    match scheme {
        LabelScheme::Sign => {
            for (v, t) in values.iter_mut().zip(targets) {
                *v = t.map(|t| u32::from(t > 0.0));
            }
        }
        LabelScheme::QuantileRank => {
            let mut by_quarter: alloc::collections::BTreeMap<_, Vec<usize>> = Default::default();
            for (i, ((_, q), t)) in keys.iter().zip(targets).enumerate() {
                if t.is_some() {
                    by_quarter.entry(*q).or_default().push(i);
                }
            }
            for rows in by_quarter.values() {
                let entries: Vec<(f64, &str)> = rows
                    .iter()
                    .map(|&i| (targets[i].expect("filtered"), keys[i].0.as_str()))
                    .collect();
                for (&i, c) in rows.iter().zip(quantile_classes(&entries, n_classes)) {
                    values[i] = Some(c);
                }
            }
        }
    }
    values
}

/// Change in net income scaled by current total assets, cut into classes.
///
/// QoQ target: `(NI[T+1] - NI[T]) / A[T]`; YoY target:
/// `(sum NI[T+1..=T+4] - sum NI[T-3..=T]) / A[T]`. Rows lacking any input,
/// or with non-positive assets, get a Missing label.
pub fn build_labels(
    panel: &RawPanel,
    denominators: &Denominators,
    horizon: Horizon,
    n_classes: u32,
    scheme: LabelScheme,
) -> Result<LabelVector> {
    validate_classes(n_classes, scheme)?;
    let schema = panel.schema();
    let ni = schema_index(schema, &denominators.net_income)
        .ok_or_else(|| Error::MissingDenominator(denominators.net_income.clone()))?;
    let at = schema_index(schema, &denominators.assets)
        .ok_or_else(|| Error::MissingDenominator(denominators.assets.clone()))?;

    let sum = |row: usize, offsets: core::ops::RangeInclusive<i64>| -> Option<f64> {
        offsets.map(|k| panel.value_at(ni, row, k)).sum()
    };
    let targets: Vec<Option<f64>> = (0..panel.len())
        .map(|row| {
            let assets = panel.columns()[at][row].filter(|a| *a > 0.0)?;
            let change = match horizon {
                Horizon::QoQ => sum(row, 1..=1)? - sum(row, 0..=0)?,
                Horizon::YoY => sum(row, 1..=4)? - sum(row, -3..=0)?,
            };
            Some(change / assets)
        })
        .collect();
    let values = classify_targets(panel.keys(), &targets, n_classes, scheme);
    Ok(LabelVector {
        keys: panel.keys().to_vec(),
        values,
        targets,
        n_classes,
        horizon,
        scheme,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{StatementGroup, VariableSpec};
    use crate::quarter::CalendarQuarter;
    use alloc::string::{String, ToString};
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn rank_order_three_classes() {
        assert_eq!(quantile_classes(&[(-5.0, "a"), (0.0, "b"), (9.0, "c")], 3), vec![0, 1, 2]);
    }

    #[test]
    fn nine_samples_three_per_class() {
        let names: Vec<String> = (0..9).map(|i| i.to_string()).collect();
        let entries: Vec<(f64, &str)> = names.iter().enumerate().map(|(i, n)| ((i * 7 % 9) as f64, n.as_str())).collect();
        let c = quantile_classes(&entries, 3);
        for k in 0..3 {
            assert_eq!(c.iter().filter(|&&x| x == k).count(), 3);
        }
    }

    #[test]
    fn ties_broken_by_company_id() {
        assert_eq!(quantile_classes(&[(1.0, "b"), (1.0, "a")], 2), vec![1, 0]);
    }

    fn panel(ni: &[(&str, &[f64])], assets: f64) -> RawPanel {
        let d = Denominators::default();
        let schema = vec![
            VariableSpec::from_flags("niq", StatementGroup::Income, false, false, false, false, true, false, &d),
            VariableSpec::from_flags("atq", StatementGroup::Balance, false, false, false, false, true, false, &d),
        ];
        let q0 = CalendarQuarter::new(2008, 1).unwrap();
        let mut obs = vec![];
        for (c, series) in ni {
            for (t, v) in series.iter().enumerate() {
                obs.push((*c, q0.offset(t as i64), "niq", Some(*v)));
                obs.push((*c, q0.offset(t as i64), "atq", Some(assets)));
            }
        }
        RawPanel::from_observations(schema, obs).unwrap()
    }

    #[test]
    fn qoq_targets_and_sign_boundary() {
        let p = panel(&[("a", &[10.0, 15.0, 15.0])], 100.0);
        let l = build_labels(&p, &Denominators::default(), Horizon::QoQ, 2, LabelScheme::Sign).unwrap();
        assert_eq!(l.targets, vec![Some(0.05), Some(0.0), None]);
        assert_eq!(l.values, vec![Some(1), Some(0), None]);
    }

    #[test]
    fn yoy_target_uses_four_quarter_sums() {
        let s: Vec<f64> = (0..8).map(f64::from).collect();
        let p = panel(&[("a", &s)], 10.0);
        let l = build_labels(&p, &Denominators::default(), Horizon::YoY, 2, LabelScheme::Sign).unwrap();
        // T = 3: (4+5+6+7) - (0+1+2+3) = 16.
        assert_eq!(l.targets[3], Some(1.6));
        assert!(l.targets[..3].iter().all(Option::is_none));
        assert!(l.targets[4..].iter().all(Option::is_none));
    }

    #[test]
    fn quantile_cut_within_quarter() {
        let p = panel(&[("a", &[0.0, -5.0]), ("b", &[0.0, 0.0]), ("c", &[0.0, 9.0])], 1.0);
        let l = build_labels(&p, &Denominators::default(), Horizon::QoQ, 3, LabelScheme::QuantileRank).unwrap();
        let first: Vec<_> = l.keys.iter().zip(&l.values).filter(|(k, _)| k.1.quarter() == 1).map(|(_, v)| *v).collect();
        assert_eq!(first, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn sign_scheme_requires_two_classes() {
        let p = panel(&[("a", &[1.0])], 1.0);
        assert!(build_labels(&p, &Denominators::default(), Horizon::QoQ, 3, LabelScheme::Sign).is_err());
    }

    proptest! {
        #[test]
        fn quantile_classes_balanced_and_monotone(
            targets in proptest::collection::vec(-100.0f64..100.0, 1..60),
            k in prop_oneof![Just(2u32), Just(3), Just(6), Just(9)],
        ) {
            let names: Vec<String> = (0..targets.len()).map(|i| alloc::format!("{i:03}")).collect();
            let entries: Vec<(f64, &str)> = targets.iter().copied().zip(names.iter().map(String::as_str)).collect();
            let c = quantile_classes(&entries, k);
            let counts: Vec<usize> = (0..k).map(|j| c.iter().filter(|&&x| x == j).count()).collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            for i in 0..targets.len() {
                for j in 0..targets.len() {
                    if targets[i] < targets[j] {
                        prop_assert!(c[i] <= c[j]);
                    }
                }
            }
        }
    }
}
