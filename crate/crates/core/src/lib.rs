//! Earnings-direction classification pipeline.
//!
//! The crate is `no_std` and only needs an allocator. It covers every stage
//! that does not touch the filesystem:
//!
//! - [`panel`]: quarterly company panels, sample filters and next-quarter
//!   alignment of market variables.
//! - [`features`]: format conversion, outlier capping, missing-value policy,
//!   correlation pruning, look-back lags and quantile labels.
//! - [`pca`]: covariance eigendecomposition and component selection.
//! - [`gbdt`]: histogram-binned, leaf-wise gradient-boosted trees with a
//!   softmax objective.
//! - [`tuner`]: hold-out splits and hyperparameter search.
//! - [`rollcast`]: rolling walk-forward subsets, consensus benchmarking and
//!   importance decomposition.
//! - [`synth`]: seeded synthetic panels with a planted signal.
//!
//! File formats and the command-line driver live in the `earncast` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod features;
pub mod gbdt;
pub mod linalg;
pub mod panel;
pub mod pca;
pub mod quarter;
pub mod rollcast;
pub mod synth;
pub mod tuner;

pub(crate) mod stats;

pub use error::{Error, Result};
pub use quarter::CalendarQuarter;
