//! Missing-value policy: sample deletion, variable deletion, rolling-mean
//! fill-in for ratio formats, then a constant for whatever is left.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::panel::{company_ranges, Format};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputeConfig {
    /// Columns whose missing share exceeds this are deleted.
    pub missing_rate_cutoff: f64,
    /// At most this many leading cells of each missing run are filled.
    pub horizon_cap: usize,
    /// Largest rolling period considered.
    pub max_period: usize,
    /// Quarters (including the current one) in which a missing crucial
    /// variable deletes the sample.
    pub look_back: usize,
    pub constant: f64,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        Self {
            missing_rate_cutoff: 0.70,
            horizon_cap: 8,
            max_period: 20,
            look_back: 20,
            constant: -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillEntry {
    pub column: String,
    pub format: Format,
    pub chosen_period: usize,
    /// Mean squared residual for periods 1..=max_period; empty when the
    /// column had too few values to compare.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FillReport {
    pub entries: Vec<FillEntry>,
    pub sample_deleted_rows: usize,
    pub variable_deleted_columns: Vec<String>,
    pub relevant_filled_cells: usize,
    pub constant_filled_cells: usize,
}

/// Mean squared residual of predicting each present value by the mean of
/// the up-to-`p` preceding present values of the same series, for
/// `p = 1..=max_p`. Values without any predecessor are not scored, so every
/// `p` is scored on the same cells. `None` if nothing could be scored.
pub fn fill_residuals<'a, I>(series: I, max_p: usize) -> Option<Vec<f64>>
where
    I: IntoIterator<Item = &'a [Option<f64>]>,
{
    let mut sums = vec![0.0; max_p];
    let mut n = 0usize;
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(max_p);
    for s in series {
        recent.clear();
        for v in s.iter().flatten() {
            if !recent.is_empty() {
                let mut acc = 0.0;
                for (i, sum) in sums.iter_mut().enumerate() {
                    if let Some(prev) = recent.get(i) {
                        acc += prev;
                    }
                    let k = (i + 1).min(recent.len());
                    let r = v - acc / k as f64;
                    *sum += r * r;
                }
                n += 1;
            }
            if recent.len() == max_p {
                recent.pop_back();
            }
            recent.push_front(*v);
        }
    }
    (n > 0).then(|| sums.into_iter().map(|s| s / n as f64).collect())
}

fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Rolling period in `1..=max_p` minimising [`fill_residuals`]; ties go to
/// the smaller period.
pub fn select_fill_period(series: &[Option<f64>], max_p: usize) -> Result<usize> {
    if max_p == 0 {
        return Err(Error::invalid("max_p", "must be at least 1"));
    }
    let present = series.iter().filter(|v| v.is_some()).count();
    if present < 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "{present} present values, need at least 2"
        )));
    }
    let residuals = fill_residuals([series], max_p).expect("two present values");
    Ok(argmin_first(&residuals) + 1)
}

/// Applies the four-tier missing-value policy.
///
/// `crucial_present` marks rows whose crucial raw variables are all
/// reported; without it, any Missing crucial column counts. Statistics
/// (missing rates, rolling periods) come from `fit_rows` only; filling is
/// causal and applies to every row. Deleted samples are recorded in the
/// retention mask rather than removed.
pub fn impute(
    m: &FeatureMatrix,
    cfg: &ImputeConfig,
    crucial_present: Option<&[bool]>,
    fit_rows: Option<&[bool]>,
) -> (FeatureMatrix, FillReport) {
    let mut report = FillReport::default();
    let n = m.n_rows();
    let ranges = company_ranges(m.keys());
    let in_fit = |r: usize| fit_rows.is_none_or(|f| f[r]);

    // Sample deletion.
    let crucial_ok: Vec<bool> = match crucial_present {
        Some(flags) => flags.to_vec(),
        None => (0..n)
            .map(|r| {
                m.metas()
                    .iter()
                    .zip(m.columns())
                    .all(|(meta, col)| !meta.crucial || col[r].is_some())
            })
            .collect(),
    };
    let mut retained = m.retained().to_vec();
    for range in &ranges {
        let mut last_bad: Option<i64> = None;
        for r in range.clone() {
            let ord = m.keys()[r].1.ordinal();
            if !crucial_ok[r] {
                last_bad = Some(ord);
            }
            if last_bad.is_some_and(|b| ord - b < cfg.look_back as i64) && retained[r] {
                retained[r] = false;
                report.sample_deleted_rows += 1;
            }
        }
    }

    // Variable deletion, measured before any fill.
    let rate_rows: Vec<usize> = (0..n).filter(|&r| retained[r] && in_fit(r)).collect();
    let keep: Vec<usize> = (0..m.n_cols())
        .filter(|&c| {
            if rate_rows.is_empty() {
                return true;
            }
            let missing = rate_rows.iter().filter(|&&r| m.columns()[c][r].is_none()).count();
            let rate = missing as f64 / rate_rows.len() as f64;
            if rate > cfg.missing_rate_cutoff {
                report.variable_deleted_columns.push(m.metas()[c].name());
                false
            } else {
                true
            }
        })
        .collect();
    let mut out = m.select_columns(&keep);

    let fit_series = |col: &[Option<f64>]| -> Vec<Vec<Option<f64>>> {
        ranges
            .iter()
            .map(|range| {
                range
                    .clone()
                    .map(|r| if in_fit(r) { col[r] } else { None })
                    .collect()
            })
            .collect()
    };

    let (columns, metas, out_retained) = out.parts_mut();
    *out_retained = retained.clone();
    for (col, meta) in columns.iter_mut().zip(metas.iter()) {
        if meta.format.is_ratio() {
            let series = fit_series(col);
            let residuals =
                fill_residuals(series.iter().map(Vec::as_slice), cfg.max_period).unwrap_or_default();
            let p = if residuals.is_empty() { 1 } else { argmin_first(&residuals) + 1 };
            report.entries.push(FillEntry {
                column: meta.name(),
                format: meta.format,
                chosen_period: p,
                residuals,
            });
            for range in &ranges {
                let mut recent: VecDeque<f64> = VecDeque::with_capacity(p);
                let mut run = 0usize;
                for r in range.clone() {
                    match col[r] {
                        Some(v) => {
                            run = 0;
                            if recent.len() == p {
                                recent.pop_back();
                            }
                            recent.push_front(v);
                        }
                        None => {
                            if !recent.is_empty() && run < cfg.horizon_cap {
                                col[r] = Some(recent.iter().sum::<f64>() / recent.len() as f64);
                                if retained[r] {
                                    report.relevant_filled_cells += 1;
                                }
                            }
                            run += 1;
                        }
                    }
                }
            }
        }
        for (r, v) in col.iter_mut().enumerate() {
            if v.is_none() {
                *v = Some(cfg.constant);
                if retained[r] {
                    report.constant_filled_cells += 1;
                }
            }
        }
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::super::test_util::{meta, single_company};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force oracle: recompute every residual from scratch.
    fn brute_force_period(series: &[Option<f64>], max_p: usize) -> usize {
        let present: Vec<f64> = series.iter().flatten().copied().collect();
        let mut best = (f64::INFINITY, 0);
        for p in 1..=max_p {
            let mut total = 0.0;
            let mut n = 0;
            for t in 1..present.len() {
                let lo = t.saturating_sub(p);
                let window = &present[lo..t];
                let mean = window.iter().sum::<f64>() / window.len() as f64;
                total += (present[t] - mean) * (present[t] - mean);
                n += 1;
            }
            let avg = total / n as f64;
            if avg < best.0 {
                best = (avg, p);
            }
        }
        best.1
    }

    #[test]
    fn constant_series_ties_to_one() {
        let s = [Some(5.0); 4];
        assert_eq!(select_fill_period(&s, 20), Ok(1));
    }

    #[test]
    fn too_few_values_is_an_error() {
        assert!(matches!(
            select_fill_period(&[Some(1.0), None], 20),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn random_walk_prefers_forward_fill() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut x = 0.0;
        let s: Vec<Option<f64>> = (0..200)
            .map(|_| {
                x += rng.random_range(-1.0..1.0);
                Some(x)
            })
            .collect();
        assert_eq!(brute_force_period(&s, 20), 1);
        assert_eq!(select_fill_period(&s, 20), Ok(1));
    }

    #[test]
    fn matches_brute_force_with_gaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let len = rng.random_range(3..60);
            let s: Vec<Option<f64>> = (0..len)
                .map(|_| rng.random_bool(0.8).then(|| rng.random_range(-3.0..3.0)))
                .collect();
            if s.iter().flatten().count() < 2 {
                continue;
            }
            assert_eq!(select_fill_period(&s, 20).unwrap(), brute_force_period(&s, 20));
        }
    }

    fn pct(name: &str) -> crate::features::FeatureColumnMeta {
        meta(name, Format::PctAssets)
    }

    #[test]
    fn forward_fill_with_period_one() {
        let m = single_company(vec![(pct("x"), vec![Some(3.0), None, None, Some(3.0), Some(3.0)])]);
        let (out, report) = impute(&m, &ImputeConfig::default(), None, None);
        assert_eq!(out.columns()[0], vec![Some(3.0); 5]);
        assert_eq!(report.relevant_filled_cells, 2);
        assert_eq!(report.entries[0].chosen_period, 1);
    }

    #[test]
    fn long_gap_fills_eight_then_constant() {
        let mut s = vec![Some(2.0), Some(2.0)];
        s.extend([None; 10]);
        s.extend([Some(2.0); 10]);
        let m = single_company(vec![(pct("x"), s)]);
        let (out, report) = impute(&m, &ImputeConfig::default(), None, None);
        let col = &out.columns()[0];
        assert!(col[2..10].iter().all(|v| *v == Some(2.0)));
        assert_eq!(&col[10..12], &[Some(-1.0), Some(-1.0)]);
        assert_eq!(report.relevant_filled_cells, 8);
        assert_eq!(report.constant_filled_cells, 2);
    }

    #[test]
    fn growth_columns_get_constant_only() {
        let m = single_company(vec![(meta("x", Format::QoQ), vec![Some(0.1), None, Some(0.1)])]);
        let (out, _) = impute(&m, &ImputeConfig::default(), None, None);
        assert_eq!(out.columns()[0][1], Some(-1.0));
    }

    #[test]
    fn column_over_seventy_percent_missing_deleted() {
        let mut sparse = vec![None; 71];
        sparse.extend([Some(1.0); 29]);
        let mut dense = vec![None; 70];
        dense.extend([Some(1.0); 30]);
        let m = single_company(vec![(meta("a", Format::QoQ), sparse), (meta("b", Format::QoQ), dense)]);
        let (out, report) = impute(&m, &ImputeConfig::default(), None, None);
        assert_eq!(out.n_cols(), 1);
        assert_eq!(out.metas()[0].base_variable, "b");
        assert_eq!(report.variable_deleted_columns, vec![String::from("a_qoq_l0")]);
        assert_eq!(out.missing_count(), 0);
    }

    #[test]
    fn crucial_gap_deletes_look_back_window() {
        let mut c = meta("atq", Format::Raw);
        c.crucial = true;
        let mut s = vec![Some(1.0); 30];
        s[5] = None;
        let m = single_company(vec![(c, s)]);
        let cfg = ImputeConfig { look_back: 4, ..Default::default() };
        let (out, report) = impute(&m, &cfg, None, None);
        let deleted: Vec<usize> = (0..30).filter(|&r| !out.retained()[r]).collect();
        assert_eq!(deleted, vec![5, 6, 7, 8]);
        assert_eq!(report.sample_deleted_rows, 4);
    }
}
