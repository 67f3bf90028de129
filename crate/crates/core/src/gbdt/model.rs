use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Node, Tree, TreeGrower};
use super::{BinMapper, BinnedMatrix, HyperParams};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Floor applied to class priors so absent classes keep a finite score.
const PRIOR_FLOOR: f64 = 1e-6;
const PROB_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceKind {
    SplitCount,
    TotalGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub n_classes: usize,
    pub mappers: Vec<BinMapper>,
    /// Log class priors of the training labels.
    pub base_score: Vec<f64>,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<Tree>>,
    /// Fewer than two classes were present; the model is the prior only.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Training log-loss after each round (index 0 is the prior).
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
    /// Rounds kept in the model.
    pub best_rounds: usize,
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    row.iter_mut().for_each(|v| *v /= sum);
}

/// Mean negative log-likelihood of `labels` under per-row class scores.
pub fn log_loss(scores: &[f64], labels: &[u32], n_classes: usize) -> f64 {
    let mut total = 0.0;
    let mut p = vec![0.0; n_classes];
    for (row, &y) in scores.chunks(n_classes).zip(labels) {
        p.copy_from_slice(row);
        softmax_in_place(&mut p);
        total -= libm::log(p[y as usize].max(PROB_FLOOR));
    }
    total / labels.len().max(1) as f64
}

/// Softmax cross-entropy gradients and diagonal hessians, class-major:
/// `g[k][i] = p_ik - y_ik`, `h[k][i] = p_ik (1 - p_ik)`.
pub fn softmax_gradients(scores: &[f64], labels: &[u32], n_classes: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = labels.len();
    let mut g = vec![vec![0.0; n]; n_classes];
    let mut h = vec![vec![0.0; n]; n_classes];
    let mut p = vec![0.0; n_classes];
    for (i, (row, &y)) in scores.chunks(n_classes).zip(labels).enumerate() {
        p.copy_from_slice(row);
        softmax_in_place(&mut p);
        for k in 0..n_classes {
            let target = if k == y as usize { 1.0 } else { 0.0 };
            g[k][i] = p[k] - target;
            h[k][i] = p[k] * (1.0 - p[k]);
        }
    }
    (g, h)
}

pub fn fit(binned: &BinnedMatrix, labels: &[u32], n_classes: usize, params: &HyperParams) -> Result<GbdtModel> {
    fit_with_validation(binned, labels, n_classes, params, None).map(|(m, _)| m)
}

/// Boosts `params.n_rounds` rounds. With a validation set and
/// `early_stopping_rounds`, stops once validation loss has not improved for
/// that many rounds and keeps the best prefix.
pub fn fit_with_validation(
    binned: &BinnedMatrix,
    labels: &[u32],
    n_classes: usize,
    params: &HyperParams,
    valid: Option<(&BinnedMatrix, &[u32])>,
) -> Result<(GbdtModel, FitReport)> {
    params.validate()?;
    let n = binned.n_rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    if n_classes < 2 {
        return Err(Error::invalid("n_classes", "must be at least 2"));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y as usize >= n_classes) {
        return Err(Error::invalid("labels", alloc::format!("class {bad} out of range")));
    }
    if n == 0 {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    if let Some((vb, vl)) = valid {
        if vb.n_features() != binned.n_features() || vl.len() != vb.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: binned.n_features(),
                actual: vb.n_features(),
            });
        }
    }

    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        counts[y as usize] += 1;
    }
    let base_score: Vec<f64> = counts
        .iter()
        .map(|&c| libm::log((c as f64 / n as f64).max(PRIOR_FLOOR)))
        .collect();
    let mut model = GbdtModel {
        n_classes,
        mappers: binned.mappers.clone(),
        base_score: base_score.clone(),
        trees: Vec::new(),
        degenerate: counts.iter().filter(|&&c| c > 0).count() < 2,
    };
    let mut report = FitReport::default();
    let mut scores: Vec<f64> = base_score.iter().copied().cycle().take(n * n_classes).collect();
    report.train_loss.push(log_loss(&scores, labels, n_classes));
    let mut valid_scores: Vec<f64> = valid
        .map(|(vb, _)| base_score.iter().copied().cycle().take(vb.n_rows() * n_classes).collect())
        .unwrap_or_default();
    if let Some((_, vl)) = valid {
        report.valid_loss.push(log_loss(&valid_scores, vl, n_classes));
    }
    if model.degenerate {
        return Ok((model, report));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let d = binned.n_features();
    let all_features: Vec<usize> = (0..d).collect();
    let n_features = if params.feature_fraction < 1.0 {
        (libm::round(params.feature_fraction * d as f64) as usize).clamp(1, d.max(1))
    } else {
        d
    };
    let mut bag: Vec<u32> = (0..n as u32).collect();
    let mut best = (report.valid_loss.first().copied().unwrap_or(f64::INFINITY), 0usize);

    for round in 0..params.n_rounds {
        if params.bagging_enabled() && round % params.bagging_freq == 0 {
            let k = (libm::round(params.bagging_fraction * n as f64) as usize).clamp(1, n);
            let mut idx: Vec<u32> = sample(&mut rng, n, k).into_iter().map(|i| i as u32).collect();
            idx.sort_unstable();
            bag = idx;
        }
        let (grad, hess) = softmax_gradients(&scores, labels, n_classes);
        let mut round_trees = Vec::with_capacity(n_classes);
        for k in 0..n_classes {
            let features: Vec<usize> = if n_features < d {
                let mut f = sample(&mut rng, d, n_features).into_vec();
                f.sort_unstable();
                f
            } else {
                all_features.clone()
            };
            let grower = TreeGrower {
                binned,
                grad: &grad[k],
                hess: &hess[k],
                features: &features,
                params,
            };
            let tree = grower.grow(bag.clone());
            for i in 0..n {
                scores[i * n_classes + k] += tree.predict_row(binned, i);
            }
            if let Some((vb, _)) = valid {
                for i in 0..vb.n_rows() {
                    valid_scores[i * n_classes + k] += tree.predict_row(vb, i);
                }
            }
            round_trees.push(tree);
        }
        model.trees.push(round_trees);
        report.train_loss.push(log_loss(&scores, labels, n_classes));
        if let Some((_, vl)) = valid {
            let loss = log_loss(&valid_scores, vl, n_classes);
            report.valid_loss.push(loss);
            if loss < best.0 {
                best = (loss, round + 1);
            }
            if let Some(patience) = params.early_stopping_rounds {
                if round + 1 - best.1 >= patience {
                    break;
                }
            }
        }
    }
    if valid.is_some() && params.early_stopping_rounds.is_some() {
        model.trees.truncate(best.1);
    }
    report.best_rounds = model.trees.len();
    Ok((model, report))
}

impl GbdtModel {
    pub fn n_features(&self) -> usize {
        self.mappers.len()
    }

    /// Per-row raw class scores, row-major.
    pub fn predict_raw(&self, binned: &BinnedMatrix) -> Result<Vec<f64>> {
        if binned.n_features() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: binned.n_features(),
            });
        }
        let k = self.n_classes;
        let mut scores: Vec<f64> = self.base_score.iter().copied().cycle().take(binned.n_rows() * k).collect();
        for round in &self.trees {
            for (c, tree) in round.iter().enumerate() {
                for i in 0..binned.n_rows() {
                    scores[i * k + c] += tree.predict_row(binned, i);
                }
            }
        }
        Ok(scores)
    }

    pub fn predict_proba(&self, binned: &BinnedMatrix) -> Result<Matrix> {
        let mut scores = self.predict_raw(binned)?;
        for row in scores.chunks_mut(self.n_classes) {
            softmax_in_place(row);
        }
        Matrix::from_row_major(binned.n_rows(), self.n_classes, scores)
    }

    /// Bins `x` with the training mappers, then predicts.
    pub fn predict_proba_dense(&self, x: &Matrix) -> Result<Matrix> {
        self.predict_proba(&BinnedMatrix::apply(&self.mappers, x)?)
    }

    /// Most probable class per row; ties go to the lower class.
    pub fn predict_class(&self, binned: &BinnedMatrix) -> Result<Vec<u32>> {
        let p = self.predict_proba(binned)?;
        Ok((0..p.rows())
            .map(|r| {
                let row = p.row(r);
                row.iter()
                    .enumerate()
                    .fold(0, |best, (i, v)| if *v > row[best] { i } else { best }) as u32
            })
            .collect())
    }

    /// Keeps the first `rounds` boosting rounds.
    pub fn truncate_rounds(&mut self, rounds: usize) {
        self.trees.truncate(rounds);
    }

    pub fn feature_importance(&self, kind: ImportanceKind) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features()];
        for tree in self.trees.iter().flatten() {
            for node in &tree.nodes {
                if let Node::Split { feature, gain, .. } = node {
                    out[*feature] += match kind {
                        ImportanceKind::SplitCount => 1.0,
                        ImportanceKind::TotalGain => *gain,
                    };
                }
            }
        }
        out
    }
}
