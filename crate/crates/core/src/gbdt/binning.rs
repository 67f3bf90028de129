use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Bin upper edges for one feature. A value maps to the first bin whose
/// edge is `>= value`; values above every edge land in the last bin and NaN
/// lands in the reserved missing bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub edges: Vec<f64>,
}

impl BinMapper {
    /// Quantile edges from training values, at most `max_bin` bins.
    pub fn fit(values: &[f64], max_bin: usize) -> Self {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        sorted.sort_by(f64::total_cmp);
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for v in sorted.iter().copied() {
            match distinct.last_mut() {
                Some((last, count)) if *last == v => *count += 1,
                _ => distinct.push((v, 1)),
            }
        }
        let mut edges = Vec::new();
        if distinct.len() <= max_bin {
            for pair in distinct.windows(2) {
                edges.push(midpoint(pair[0].0, pair[1].0));
            }
        } else {
            let per_bin = sorted.len() as f64 / max_bin as f64;
            let mut cumulative = 0usize;
            for (i, &(v, count)) in distinct.iter().enumerate().take(distinct.len() - 1) {
                cumulative += count;
                let target = per_bin * (edges.len() + 1) as f64;
                if cumulative as f64 >= target - 1e-9 && edges.len() + 1 < max_bin {
                    edges.push(midpoint(v, distinct[i + 1].0));
                }
            }
        }
        Self { edges }
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn missing_bin(&self) -> u16 {
        self.n_bins() as u16
    }

    pub fn bin(&self, value: f64) -> u16 {
        if value.is_nan() {
            return self.missing_bin();
        }
        self.edges.partition_point(|e| *e < value) as u16
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m.is_finite() {
        m
    } else {
        a
    }
}

/// Feature-major bin codes plus the mappers that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedMatrix {
    pub mappers: Vec<BinMapper>,
    codes: Vec<Vec<u16>>,
    n_rows: usize,
}

impl BinnedMatrix {
    /// Applies frozen mappers to new rows.
    pub fn apply(mappers: &[BinMapper], x: &Matrix) -> Result<Self> {
        if x.cols() != mappers.len() {
            return Err(Error::DimensionMismatch {
                expected: mappers.len(),
                actual: x.cols(),
            });
        }
        let codes = mappers
            .iter()
            .enumerate()
            .map(|(f, m)| (0..x.rows()).map(|r| m.bin(x[(r, f)])).collect())
            .collect();
        Ok(Self {
            mappers: mappers.to_vec(),
            codes,
            n_rows: x.rows(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.mappers.len()
    }

    pub fn feature_codes(&self, f: usize) -> &[u16] {
        &self.codes[f]
    }

    pub fn code(&self, row: usize, f: usize) -> u16 {
        self.codes[f][row]
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            mappers: self.mappers.clone(),
            codes: self
                .codes
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            n_rows: rows.len(),
        }
    }
}

/// Fits per-feature quantile mappers on `x` and bins it.
pub fn bin_features(x: &Matrix, max_bin: usize) -> Result<BinnedMatrix> {
    if max_bin < 2 || max_bin >= u16::MAX as usize {
        return Err(Error::invalid("max_bin", "must lie in 2..=65534"));
    }
    let mappers: Vec<BinMapper> = (0..x.cols())
        .map(|f| BinMapper::fit(&x.column(f), max_bin))
        .collect();
    BinnedMatrix::apply(&mappers, x)
}
