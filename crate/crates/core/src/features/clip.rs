use alloc::vec::Vec;

use super::FeatureMatrix;
use crate::stats::nearest_rank_quantile;

pub const DEFAULT_CAP_QUANTILE: f64 = 0.95;

/// Caps growth and ratio columns at the `pct` quantile of their
/// positive-origin values and re-applies the zero-clamp floor.
///
/// Caps are fitted on `fit_rows` (all rows when `None`) and stored in the
/// column metas; every row is clipped. `positive_origin` comes from
/// [`super::convert_formats`]; without it, every finite present value
/// counts. Non-finite values go to the cap, or to Missing when no cap can be
/// fitted.
pub fn clip_outliers(
    m: &FeatureMatrix,
    positive_origin: Option<&[Vec<bool>]>,
    fit_rows: Option<&[bool]>,
    pct: f64,
) -> FeatureMatrix {
    let mut out = m.clone();
    let (columns, metas, _) = out.parts_mut();
    for (c, (col, meta)) in columns.iter_mut().zip(metas.iter_mut()).enumerate() {
        if !meta.is_clippable() {
            continue;
        }
        let in_fit = |r: usize| fit_rows.is_none_or(|f| f[r]);
        let candidates = |require_origin: bool| -> Vec<f64> {
            col.iter()
                .enumerate()
                .filter(|&(r, _)| in_fit(r))
                .filter(|&(r, _)| !require_origin || positive_origin.is_none_or(|o| o[c][r]))
                .filter_map(|(_, v)| v.filter(|x| x.is_finite()))
                .map(|x| meta.floor.map_or(x, |f| x.max(f)))
                .collect()
        };
        let mut pool = candidates(true);
        if pool.is_empty() {
            pool = candidates(false);
        }
        let cap = nearest_rank_quantile(&mut pool, pct);
        meta.cap = cap;
        for v in col.iter_mut() {
            let Some(x) = *v else { continue };
            let mut y = x;
            if let Some(floor) = meta.floor {
                if y < floor {
                    y = floor;
                }
            }
            match cap {
                Some(cap) if y > cap || y.is_nan() => y = cap,
                None if !y.is_finite() => {
                    *v = None;
                    continue;
                }
                _ => {}
            }
            *v = Some(y);
        }
    }
    out
}
