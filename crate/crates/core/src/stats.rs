//! Small numeric helpers shared across modules.

use alloc::vec::Vec;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Nearest-rank quantile: the smallest sample value whose empirical CDF
/// reaches `q`. Returns `None` for an empty slice. Sorts in place.
pub fn nearest_rank_quantile(values: &mut [f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let rank = libm::ceil(q * n as f64) as usize;
    Some(values[rank.clamp(1, n) - 1])
}

#[cfg(test)]
/// Pearson correlation. Zero-variance inputs yield 0.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    sab / libm::sqrt(saa * sbb)
}

/// Centers and scales to unit norm, so that the dot product of two outputs
/// is their Pearson correlation. Constant inputs become all zeros.
pub fn unit_centered(values: &[f64]) -> Vec<f64> {
    let m = mean(values);
    let mut out: Vec<f64> = values.iter().map(|v| v - m).collect();
    let norm = libm::sqrt(out.iter().map(|v| v * v).sum::<f64>());
    if norm > 0.0 {
        out.iter_mut().for_each(|v| *v /= norm);
    } else {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_picks_sample_value() {
        let mut v = [0.2, 0.1];
        assert_eq!(nearest_rank_quantile(&mut v, 0.95), Some(0.2));
        let mut v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank_quantile(&mut v, 0.95), Some(95.0));
        assert_eq!(nearest_rank_quantile(&mut [], 0.5), None);
    }

    #[test]
    fn pearson_of_affine_copy_is_one() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let b: Vec<f64> = a.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((pearson(&a, &b) - 1.0).abs() < 1e-12);
        assert_eq!(pearson(&a, &[5.0; 4]), 0.0);
    }
}
