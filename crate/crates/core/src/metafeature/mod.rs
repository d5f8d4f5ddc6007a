//! Metafeature representations.
//!
//! A metafeature groups many fine-grained features into one higher-level,
//! denser feature. Two construction routes are supported:
//!
//! * **data-driven** — factorize the training matrix as `X ~ L R`, assign
//!   each fine-grained feature to the metafeature with the largest loading
//!   in its column of `R`, project instances through that assignment, and
//!   normalize by the number of active features per instance;
//! * **domain-based** — an expert-provided feature-to-group table, with
//!   unmapped features collected into a reserved "other" group.

mod factor;
mod space;

pub use factor::{
    fit_nmf, fit_svd, fit_svd_with, FactorModel, FactorizationMethod, FitMeta, SvdOptions,
};
pub use space::{
    binarize_r, build_ddmf, build_ddmf_with, build_domain_mf, match_metafeatures,
    project_and_normalize, project_with, BinaryAssignment, FactorOptions, MetafeatureKind,
    MetafeatureMatrix, MetafeatureSpace, NormalizationMode,
};
