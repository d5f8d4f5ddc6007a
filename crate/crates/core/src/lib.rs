//! Core algorithms for explaining black-box classifiers trained on
//! high-dimensional sparse data with small metafeature-based rule sets.
//!
//! The crate covers:
//!
//! * [`sparse`] — a compressed sparse-row matrix, tf-idf weighting, and
//!   row statistics for fine-grained feature matrices;
//! * [`sampling`] — stratified train/validation/test splits, stratified
//!   cross-validation folds, and bootstrap resampling;
//! * [`blackbox`] — an L2-regularized logistic regression trained from
//!   scratch, regularization tuning, and base-rate threshold calibration;
//! * [`metafeature`] — NMF/SVD factorization, the binarize/project/normalize
//!   pipeline that turns factor loadings into metafeature matrices, and
//!   domain-defined feature groupings;
//! * [`tree`] — CART decision-tree induction with the Gini criterion, rule
//!   export, and impurity-reduction diagnostics;
//! * [`eval`] — fidelity, f-fidelity, accuracy, bootstrap-Jaccard stability,
//!   and the exact Wilcoxon signed-rank comparison.
//!
//! The crate is `no_std`-compatible (it requires `alloc`); all transcendental
//! float math is routed through `libm` so results are bit-identical across
//! platforms. File formats, the CLI, and the experiment harness live in the
//! companion `metarex` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod blackbox;
pub mod dataset;
pub mod dense;
pub mod error;
pub mod eval;
mod math;
pub mod metafeature;
pub mod rng;
pub mod sampling;
pub mod sparse;
pub mod tree;

pub use dataset::{Dataset, DatasetStats, Label};
pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use sparse::SparseMatrix;
