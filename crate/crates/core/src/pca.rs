//! Principal component analysis on the sample covariance matrix.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};

/// Slack used when comparing cumulative explained variance to a threshold,
/// so that a threshold of 1.0 is reachable despite rounding.
pub const CUMULATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Per-feature standard deviations when fitted with `standardize`.
    pub scale: Option<Vec<f64>>,
    /// d × d, one component per column, ordered by descending eigenvalue.
    pub loadings: Matrix,
    pub eigenvalues: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    pub kept: usize,
}

/// Fits all components; `kept` starts at the full dimension.
///
/// Centers each column (and divides by its standard deviation when
/// `standardize` is set, leaving constant columns unscaled). Constant
/// columns are allowed and contribute zero eigenvalues; an input with no
/// variance at all is degenerate.
pub fn fit_pca(x: &Matrix, standardize: bool) -> Result<PcaModel> {
    let (m, d) = (x.rows(), x.cols());
    if m < 2 {
        return Err(Error::Degenerate(alloc::format!("{m} rows, need at least 2")));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite input".into()));
    }
    let mut mean = vec![0.0; d];
    for r in 0..m {
        for (acc, v) in mean.iter_mut().zip(x.row(r)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);

    let mut cov = Matrix::zeros(d, d);
    let mut centered = vec![0.0; d];
    for r in 0..m {
        for ((c, v), mu) in centered.iter_mut().zip(x.row(r)).zip(&mean) {
            *c = v - mu;
        }
        for i in 0..d {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = cov.row_mut(i);
            for j in 0..=i {
                row[j] += ci * centered[j];
            }
        }
    }
    let denom = (m - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let scale = if standardize {
        let sd: Vec<f64> = (0..d)
            .map(|i| {
                let s = libm::sqrt(cov[(i, i)]);
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] /= sd[i] * sd[j];
            }
        }
        Some(sd)
    } else {
        None
    };

    let eig = symmetric_eigen(&cov)?;
    let mut loadings = Matrix::zeros(d, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (k, src) in (0..d).rev().enumerate() {
        eigenvalues.push(eig.values[src].max(0.0));
        let mut col = eig.vectors.column(src);
        let pivot = col
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if libm::fabs(*v) > libm::fabs(col[best]) { i } else { best });
        if col[pivot] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        for (i, v) in col.into_iter().enumerate() {
            loadings[(i, k)] = v;
        }
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("every column is constant".into()));
    }
    let explained_ratio = eigenvalues.iter().map(|l| l / total).collect();
    Ok(PcaModel {
        mean,
        scale,
        loadings,
        eigenvalues,
        explained_ratio,
        kept: d,
    })
}

/// Smallest number of leading components whose cumulative explained
/// variance reaches `threshold`.
pub fn choose_components(explained_ratio: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid("threshold", "must lie in (0, 1]"));
    }
    let mut cumulative = 0.0;
    for (k, r) in explained_ratio.iter().enumerate() {
        cumulative += r;
        if cumulative >= threshold - CUMULATIVE_TOLERANCE {
            return Ok(k + 1);
        }
    }
    Ok(explained_ratio.iter().filter(|r| **r > 0.0).count().max(1))
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn with_kept(mut self, kept: usize) -> Self {
        self.kept = kept.clamp(1, self.dim().max(1));
        self
    }

    pub fn select_components(self, threshold: f64) -> Result<Self> {
        let k = choose_components(&self.explained_ratio, threshold)?;
        Ok(self.with_kept(k))
    }

    /// Loading of original feature `feature` on component `component`.
    pub fn loading(&self, feature: usize, component: usize) -> f64 {
        self.loadings[(feature, component)]
    }

    /// Scores on the kept components: `(x - mean) W`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        let d = self.dim();
        if x.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: x.cols(),
            });
        }
        let k = self.kept;
        let mut out = Matrix::zeros(x.rows(), k);
        let mut centered = vec![0.0; d];
        for r in 0..x.rows() {
            for (i, c) in centered.iter_mut().enumerate() {
                *c = x[(r, i)] - self.mean[i];
                if let Some(s) = &self.scale {
                    *c /= s[i];
                }
            }
            let dst = out.row_mut(r);
            for (i, &c) in centered.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let w = &self.loadings.row(i)[..k];
                for (o, wv) in dst.iter_mut().zip(w) {
                    *o += c * wv;
                }
            }
        }
        Ok(out)
    }

    /// Maps kept-component scores back to feature space: `z Wᵀ + mean`.
    pub fn reconstruct(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.kept {
            return Err(Error::DimensionMismatch {
                expected: self.kept,
                actual: z.cols(),
            });
        }
        let d = self.dim();
        let mut out = Matrix::zeros(z.rows(), d);
        for r in 0..z.rows() {
            for i in 0..d {
                let w = &self.loadings.row(i)[..self.kept];
                let mut v: f64 = z.row(r).iter().zip(w).map(|(a, b)| a * b).sum();
                if let Some(s) = &self.scale {
                    v *= s[i];
                }
                out[(r, i)] = v + self.mean[i];
            }
        }
        Ok(out)
    }
}
