//! Explanation quality metrics.
//!
//! * **fidelity** — fraction of instances where the surrogate's label
//!   equals the black-box predicted label;
//! * **f-fidel** — harmonic mean of precision and recall measured against
//!   the black-box predicted labels instead of the ground truth;
//! * **accuracy** — fraction of instances where the surrogate's label
//!   equals the ground-truth label;
//! * **stability** — mean pairwise Jaccard overlap of the feature sets
//!   appearing in explanations refitted on bootstrap resamples of the
//!   training data, with descriptor-based metafeature identity for
//!   data-driven representations;
//! * **Wilcoxon signed-rank** — one-tailed paired comparison with exact
//!   critical values for 5..=25 nonzero differences.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Label;
use crate::error::{domain, Error, Result};
use crate::math;
use crate::metafeature::{
    build_ddmf_with, FactorOptions, FactorizationMethod, MetafeatureSpace,
};
use crate::rng::child_seed;
use crate::sampling::{bootstrap_sample, BootstrapSample};
use crate::sparse::SparseMatrix;
use crate::tree::{feature_set, fit_cart, FeatureView, FitOptions, RepresentationKind};

fn check_lengths(a: &[Label], b: &[Label]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "label array length",
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Fraction of instances where the surrogate agrees with the black box.
pub fn fidelity(y_hat: &[Label], y_wb: &[Label]) -> Result<f64> {
    check_lengths(y_hat, y_wb)?;
    if y_hat.is_empty() {
        return Err(domain("fidelity of an empty label array is undefined"));
    }
    let agree = y_hat.iter().zip(y_wb).filter(|(a, b)| a == b).count();
    Ok(agree as f64 / y_hat.len() as f64)
}

/// f-fidel plus a degeneracy flag (true when precision + recall is zero).
pub fn f_fidel_flagged(y_hat: &[Label], y_wb: &[Label]) -> Result<(f64, bool)> {
    check_lengths(y_hat, y_wb)?;
    if y_hat.is_empty() {
        return Err(domain("f-fidel of an empty label array is undefined"));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&target, &pred) in y_hat.iter().zip(y_wb) {
        match (target, pred) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => {}
        }
    }
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    if precision + recall > 0.0 {
        Ok((2.0 * precision * recall / (precision + recall), false))
    } else {
        Ok((0.0, true))
    }
}

/// Harmonic mean of precision and recall with the black-box predictions
/// `y_hat` playing the role of ground truth.
pub fn f_fidel(y_hat: &[Label], y_wb: &[Label]) -> Result<f64> {
    f_fidel_flagged(y_hat, y_wb).map(|(v, _)| v)
}

/// Fraction of instances the surrogate classifies correctly against the
/// true labels.
pub fn accuracy(y_true: &[Label], y_wb: &[Label]) -> Result<f64> {
    check_lengths(y_true, y_wb)?;
    if y_true.is_empty() {
        return Err(domain("accuracy of an empty label array is undefined"));
    }
    let agree = y_true.iter().zip(y_wb).filter(|(a, b)| a == b).count();
    Ok(agree as f64 / y_true.len() as f64)
}

/// Jaccard overlap of two feature sets, with the empty-empty case defined
/// as 1 (two empty explanations are identical) and flagged by the caller
/// via [`jaccard_flagged`].
pub fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    jaccard_flagged(a, b).0
}

pub fn jaccard_flagged(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> (f64, bool) {
    if a.is_empty() && b.is_empty() {
        return (1.0, true);
    }
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    (inter / union, false)
}

/// A metafeature appearing in an explanation, identified by its
/// top-weighted member features rather than its index, so explanations
/// from independently refitted spaces can be compared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetafeatureDescriptor {
    pub id: usize,
    /// Member features ordered by descending loading.
    pub features: Vec<u32>,
}

/// Builds descriptors for every metafeature in `used` from a fitted space.
pub fn explanation_descriptors(
    space: &MetafeatureSpace,
    used: &BTreeSet<usize>,
    top_n: usize,
) -> Result<Vec<MetafeatureDescriptor>> {
    used.iter()
        .map(|&id| {
            let features = space
                .top_features(id, top_n)
                .map_err(|_| domain(format!("missing descriptor for metafeature {id}")))?
                .into_iter()
                .map(|(f, _)| f)
                .collect();
            Ok(MetafeatureDescriptor {
                id,
                features,
            })
        })
        .collect()
}

/// Explanation-level Jaccard for data-driven metafeatures.
///
/// Candidate cross pairs are ranked by descending descriptor Jaccard (on
/// the top-`top_n` member sets) and accepted greedily while both sides are
/// unmatched and the overlap reaches the cutoff `c`. Matched pairs count
/// as intersection elements:
///
/// ```text
/// J = matched / (|F_v| + |F_w| - matched)
/// ```
///
/// Returns the coefficient and a degeneracy flag for the empty-empty case.
pub fn explanation_jaccard_ddmf(
    f_v: &[MetafeatureDescriptor],
    f_w: &[MetafeatureDescriptor],
    top_n: usize,
    c: f64,
) -> (f64, bool) {
    if f_v.is_empty() && f_w.is_empty() {
        return (1.0, true);
    }
    let sets_v: Vec<BTreeSet<u32>> = f_v
        .iter()
        .map(|d| d.features.iter().take(top_n).copied().collect())
        .collect();
    let sets_w: Vec<BTreeSet<u32>> = f_w
        .iter()
        .map(|d| d.features.iter().take(top_n).copied().collect())
        .collect();

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, sv) in sets_v.iter().enumerate() {
        for (j, sw) in sets_w.iter().enumerate() {
            let overlap = if sv.is_empty() && sw.is_empty() {
                1.0
            } else {
                let inter = sv.intersection(sw).count() as f64;
                let union = sv.union(sw).count() as f64;
                inter / union
            };
            if overlap >= c {
                pairs.push((overlap, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut matched_v = vec![false; f_v.len()];
    let mut matched_w = vec![false; f_w.len()];
    let mut matched = 0usize;
    for (_, i, j) in pairs {
        if !matched_v[i] && !matched_w[j] {
            matched_v[i] = true;
            matched_w[j] = true;
            matched += 1;
        }
    }
    let denom = f_v.len() + f_w.len() - matched;
    (matched as f64 / denom as f64, false)
}

/// The feature set of one refitted explanation, with descriptors attached
/// when the representation is data-driven.
#[derive(Debug, Clone, PartialEq)]
pub enum ExplanationFeatures {
    /// Feature identity is positional (fine-grained or domain features).
    Plain(BTreeSet<usize>),
    /// Feature identity goes through descriptors (data-driven).
    Described(Vec<MetafeatureDescriptor>),
}

impl ExplanationFeatures {
    pub fn is_empty(&self) -> bool {
        match self {
            ExplanationFeatures::Plain(s) => s.is_empty(),
            ExplanationFeatures::Described(d) => d.is_empty(),
        }
    }
}

/// How the representation is rebuilt for each bootstrap sample.
#[derive(Debug, Clone)]
pub enum StabilityRepresentation<'a> {
    /// Fine-grained features are fixed; only the tree is refitted.
    FineGrained,
    /// Domain metafeatures are fixed; transform then refit the tree.
    DomainMf(&'a MetafeatureSpace),
    /// Data-driven metafeatures are recomputed on every bootstrap sample.
    DdmfRefit {
        method: FactorizationMethod,
        k: usize,
        options: FactorOptions,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    pub n_bootstrap: usize,
    pub depth: usize,
    pub min_leaf: usize,
    /// Descriptor size for metafeature matching.
    pub top_n: usize,
    /// Descriptor-Jaccard cutoff for metafeature identity.
    pub cutoff: f64,
    pub seed: u64,
}

impl StabilityOptions {
    pub fn new(depth: usize, seed: u64) -> Self {
        StabilityOptions {
            n_bootstrap: 10,
            depth,
            min_leaf: 1,
            top_n: 20,
            cutoff: 0.5,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub n_bootstrap: usize,
    /// All B(B-1)/2 pairwise coefficients, pairs ordered lexicographically.
    pub pairwise_jaccards: Vec<f64>,
    pub mean_jaccard: f64,
    pub representation_kind: RepresentationKind,
    pub matching_top_n: usize,
    pub matching_cutoff: f64,
    /// Explanations with no split at all (single-leaf trees).
    pub n_empty_explanations: usize,
    /// Pairs where both feature sets were empty (Jaccard defined as 1).
    pub degenerate_pairs: usize,
}

/// Bootstrap stability: draw `B` resamples of the training instances,
/// refit the representation (for data-driven metafeatures) and the
/// surrogate on each, and average the pairwise Jaccard overlap of the
/// explanation feature sets. Black-box labels are taken per occurrence
/// from `y_hat_train`; the black box itself is never refitted.
pub fn stability(
    x_train: &SparseMatrix,
    y_hat_train: &[Label],
    representation: &StabilityRepresentation<'_>,
    options: &StabilityOptions,
) -> Result<StabilityReport> {
    if options.n_bootstrap < 2 {
        return Err(domain("stability needs at least two bootstrap samples"));
    }
    let samples: Vec<BootstrapSample> = (0..options.n_bootstrap)
        .map(|j| bootstrap_sample(x_train.n_rows(), child_seed(options.seed, &[1, j as u64])))
        .collect::<Result<_>>()?;
    stability_with_samples(x_train, y_hat_train, representation, &samples, options)
}

/// Same as [`stability`] but with caller-provided bootstrap samples, which
/// makes degenerate controls (identical samples) testable.
pub fn stability_with_samples(
    x_train: &SparseMatrix,
    y_hat_train: &[Label],
    representation: &StabilityRepresentation<'_>,
    samples: &[BootstrapSample],
    options: &StabilityOptions,
) -> Result<StabilityReport> {
    if samples.len() < 2 {
        return Err(domain("stability needs at least two bootstrap samples"));
    }
    if y_hat_train.len() != x_train.n_rows() {
        return Err(Error::Dimension {
            what: "black-box label length",
            expected: x_train.n_rows(),
            got: y_hat_train.len(),
        });
    }
    let fit_options = FitOptions {
        max_depth: options.depth,
        min_leaf: options.min_leaf,
    };

    let mut explanations: Vec<ExplanationFeatures> = Vec::with_capacity(samples.len());
    for (j, sample) in samples.iter().enumerate() {
        let x_bs = x_train.select_rows(&sample.indices)?;
        let y_bs: Vec<Label> = sample.indices.iter().map(|&i| y_hat_train[i]).collect();
        let features = match representation {
            StabilityRepresentation::FineGrained => {
                let tree = fit_cart(
                    FeatureView::Sparse(&x_bs),
                    &y_bs,
                    fit_options,
                    RepresentationKind::FineGrained,
                )?;
                ExplanationFeatures::Plain(feature_set(&tree))
            }
            StabilityRepresentation::DomainMf(space) => {
                let mf = space.transform(&x_bs)?;
                let tree = fit_cart(
                    FeatureView::Dense(&mf.values),
                    &y_bs,
                    fit_options,
                    RepresentationKind::DomainMf,
                )?;
                ExplanationFeatures::Plain(feature_set(&tree))
            }
            StabilityRepresentation::DdmfRefit {
                method,
                k,
                options: factor_options,
            } => {
                let space = build_ddmf_with(
                    &x_bs,
                    *k,
                    *method,
                    child_seed(options.seed, &[2, j as u64]),
                    factor_options,
                )?;
                let mf = space.transform(&x_bs)?;
                let tree = fit_cart(
                    FeatureView::Dense(&mf.values),
                    &y_bs,
                    fit_options,
                    RepresentationKind::Ddmf,
                )?;
                let used = feature_set(&tree);
                ExplanationFeatures::Described(explanation_descriptors(
                    &space,
                    &used,
                    options.top_n,
                )?)
            }
        };
        explanations.push(features);
    }

    let representation_kind = match representation {
        StabilityRepresentation::FineGrained => RepresentationKind::FineGrained,
        StabilityRepresentation::DomainMf(_) => RepresentationKind::DomainMf,
        StabilityRepresentation::DdmfRefit { .. } => RepresentationKind::Ddmf,
    };
    let n_empty = explanations.iter().filter(|e| e.is_empty()).count();

    let mut pairwise = Vec::with_capacity(samples.len() * (samples.len() - 1) / 2);
    let mut degenerate_pairs = 0usize;
    for v in 0..explanations.len() {
        for w in (v + 1)..explanations.len() {
            let (value, degenerate) = match (&explanations[v], &explanations[w]) {
                (ExplanationFeatures::Plain(a), ExplanationFeatures::Plain(b)) => {
                    jaccard_flagged(a, b)
                }
                (ExplanationFeatures::Described(a), ExplanationFeatures::Described(b)) => {
                    explanation_jaccard_ddmf(a, b, options.top_n, options.cutoff)
                }
                _ => return Err(domain("mixed explanation feature kinds")),
            };
            if degenerate {
                degenerate_pairs += 1;
            }
            pairwise.push(value);
        }
    }
    let mean = pairwise.iter().sum::<f64>() / pairwise.len() as f64;
    Ok(StabilityReport {
        n_bootstrap: samples.len(),
        pairwise_jaccards: pairwise,
        mean_jaccard: mean,
        representation_kind,
        matching_top_n: options.top_n,
        matching_cutoff: options.cutoff,
        n_empty_explanations: n_empty,
        degenerate_pairs,
    })
}

/// Result of the one-tailed Wilcoxon signed-rank test.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult {
    /// The input differences, zeros included.
    pub differences: Vec<f64>,
    /// `T = min(positive rank sum, negative rank sum)`.
    pub t_statistic: f64,
    /// Number of nonzero differences actually ranked.
    pub n_effective: usize,
    /// Significance levels attained, ascending (subset of {0.01, 0.05}).
    pub significant_at: Vec<f64>,
    /// Critical values used for (alpha = 0.05, alpha = 0.01); `None` when
    /// the level is unattainable at this sample size.
    pub critical_values: [Option<f64>; 2],
    /// True when `n_effective > 25` and a normal approximation decided
    /// significance instead of the exact table.
    pub used_normal_approximation: bool,
}

/// Exact one-tailed critical values for T, n = 5..=25, at alpha = 0.05 and
/// alpha = 0.01 (-1 marks an unattainable level). The test is significant
/// when T <= critical value.
const WILCOXON_CRITICAL: [(usize, i64, i64); 21] = [
    (5, 0, -1),
    (6, 2, -1),
    (7, 3, 0),
    (8, 5, 1),
    (9, 8, 3),
    (10, 10, 5),
    (11, 13, 7),
    (12, 17, 9),
    (13, 21, 12),
    (14, 25, 15),
    (15, 30, 19),
    (16, 35, 23),
    (17, 41, 27),
    (18, 47, 32),
    (19, 53, 37),
    (20, 60, 43),
    (21, 67, 49),
    (22, 75, 55),
    (23, 83, 62),
    (24, 91, 69),
    (25, 100, 76),
];

const Z_05: f64 = 1.6448536269514722;
const Z_01: f64 = 2.3263478740408408;

/// One-tailed Wilcoxon signed-rank test on paired differences.
///
/// Zero differences are dropped; absolute values are ranked with average
/// ranks on ties; `T` is the smaller of the signed rank sums. Significance
/// uses the exact critical-value table for up to 25 nonzero differences
/// and the normal approximation beyond that.
pub fn wilcoxon_signed_rank(differences: &[f64]) -> Result<ComparisonResult> {
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(domain("differences must be finite"));
    }
    let nonzero: Vec<f64> = differences.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nonzero.len();
    if n < 5 {
        return Err(domain(format!(
            "too few nonzero differences for the signed-rank test: {n} < 5"
        )));
    }

    // Rank |d| ascending with average ranks on ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        math::abs(nonzero[a])
            .partial_cmp(&math::abs(nonzero[b]))
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n
            && math::abs(nonzero[order[j + 1]]) == math::abs(nonzero[order[i]])
        {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }

    let mut w_plus = 0.0;
    let mut w_minus = 0.0;
    for (d, r) in nonzero.iter().zip(&ranks) {
        if *d > 0.0 {
            w_plus += r;
        } else {
            w_minus += r;
        }
    }
    let t = w_plus.min(w_minus);

    let mut significant_at = Vec::new();
    let mut critical_values = [None, None];
    let mut used_normal_approximation = false;
    if n <= 25 {
        let row = WILCOXON_CRITICAL
            .iter()
            .find(|&&(size, _, _)| size == n)
            .expect("table covers 5..=25");
        if row.2 >= 0 {
            critical_values[1] = Some(row.2 as f64);
            if t <= row.2 as f64 {
                significant_at.push(0.01);
            }
        }
        critical_values[0] = Some(row.1 as f64);
        if t <= row.1 as f64 {
            significant_at.push(0.05);
        }
    } else {
        used_normal_approximation = true;
        let nf = n as f64;
        let mu = nf * (nf + 1.0) / 4.0;
        let sigma = math::sqrt(nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0);
        let z = (t - mu) / sigma;
        if z <= -Z_01 {
            significant_at.push(0.01);
        }
        if z <= -Z_05 {
            significant_at.push(0.05);
        }
    }
    significant_at.sort_by(|a, b| a.partial_cmp(b).unwrap());

    Ok(ComparisonResult {
        differences: differences.to_vec(),
        t_statistic: t,
        n_effective: n,
        significant_at,
        critical_values,
        used_normal_approximation,
    })
}
