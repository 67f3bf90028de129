use alloc::vec::Vec;

use super::{FeatureColumnMeta, FeatureMatrix};
use crate::panel::company_ranges;

/// Expands every lagged (financial) column into `n_lags` columns holding
/// the same company's values 0..n_lags-1 quarters earlier. Macro and market
/// columns stay at lag 0. Only retained rows whose full look-back exists
/// are emitted; earlier rows, including sample-deleted ones, serve as
/// history.
pub fn build_lags(m: &FeatureMatrix, n_lags: usize) -> FeatureMatrix {
    let n_lags = n_lags.max(1);
    let any_lagged = m.metas().iter().any(FeatureColumnMeta::is_lagged);
    let depth = if any_lagged { n_lags } else { 1 };

    // Source row for each (emitted row, lag).
    let mut emitted: Vec<usize> = Vec::new();
    let mut sources: Vec<Vec<usize>> = Vec::new();
    for range in company_ranges(m.keys()) {
        let keys = &m.keys()[range.clone()];
        for (offset, (_, quarter)) in keys.iter().enumerate() {
            let r = range.start + offset;
            if !m.retained()[r] {
                continue;
            }
            let found: Option<Vec<usize>> = (0..depth)
                .map(|lag| {
                    let target = quarter.offset(-(lag as i64));
                    keys[..=offset]
                        .binary_search_by(|(_, q)| q.cmp(&target))
                        .ok()
                        .map(|i| range.start + i)
                })
                .collect();
            if let Some(found) = found {
                emitted.push(r);
                sources.push(found);
            }
        }
    }

    let mut columns = Vec::new();
    let mut metas = Vec::new();
    for (col, meta) in m.columns().iter().zip(m.metas()) {
        let lags = if meta.is_lagged() { n_lags } else { 1 };
        for lag in 0..lags {
            columns.push(sources.iter().map(|src| col[src[lag]]).collect());
            metas.push(FeatureColumnMeta {
                lag: lag as u8,
                ..meta.clone()
            });
        }
    }
    let keys = emitted.iter().map(|&r| m.keys()[r].clone()).collect();
    FeatureMatrix::new(keys, columns, metas).expect("lag metas are unique by construction")
}

#[cfg(test)]
mod tests {
    use super::super::test_util::{meta, single_company};
    use super::*;
    use crate::panel::{Format, StatementGroup};
    use alloc::format;
    use alloc::vec;

    #[test]
    fn lag_values_come_from_earlier_quarters() {
        let s: Vec<Option<f64>> = (0..5).map(|t| Some(t as f64)).collect();
        let m = single_company(vec![(meta("x", Format::QoQ), s)]);
        let l = build_lags(&m, 3);
        assert_eq!(l.n_rows(), 3);
        assert_eq!(l.n_cols(), 3);
        assert_eq!(l.columns()[0], vec![Some(2.0), Some(3.0), Some(4.0)]);
        assert_eq!(l.columns()[2], vec![Some(0.0), Some(1.0), Some(2.0)]);
        assert_eq!(l.metas()[2].lag, 2);
    }

    #[test]
    fn single_lag_is_identity() {
        let s: Vec<Option<f64>> = (0..5).map(|t| Some(t as f64)).collect();
        let m = single_company(vec![(meta("x", Format::QoQ), s)]);
        let l = build_lags(&m, 1);
        assert_eq!(l.columns(), m.columns());
        assert_eq!(l.keys(), m.keys());
    }

    #[test]
    fn short_history_emits_nothing() {
        let m = single_company(vec![(meta("x", Format::QoQ), vec![Some(1.0); 19])]);
        assert_eq!(build_lags(&m, 20).n_rows(), 0);
    }

    #[test]
    fn column_count_closed_form() {
        let mut cols = Vec::new();
        for i in 0..154 {
            cols.push((meta(&format!("f{i}"), Format::YoY), vec![Some(1.0); 21]));
        }
        for i in 0..11 {
            let mut mm = meta(&format!("m{i}"), Format::Raw);
            mm.statement_group = if i % 2 == 0 { StatementGroup::Macro } else { StatementGroup::Market };
            cols.push((mm, vec![Some(1.0); 21]));
        }
        let l = build_lags(&single_company(cols), 20);
        assert_eq!(l.n_cols(), 3091);
        assert_eq!(l.n_rows(), 2);
    }

    #[test]
    fn deleted_rows_serve_as_history_only() {
        let s: Vec<Option<f64>> = (0..4).map(|t| Some(t as f64)).collect();
        let mut m = single_company(vec![(meta("x", Format::QoQ), s)]);
        m.parts_mut().2[2] = false;
        let l = build_lags(&m, 2);
        assert_eq!(l.columns()[1], vec![Some(0.0), Some(2.0)]);
    }
}
