//! Train/validation/test splitting, cross-validation folds, and bootstrap
//! resampling.
//!
//! All plans are stratified by label and deterministic given their seed.
//! Partition sizes follow the `alpha`/`beta` scheme: `alpha * beta * n`
//! instances for training, `alpha * (1 - beta) * n` for validation, and
//! `(1 - alpha) * n` for testing, with rounding remainders assigned to the
//! training partition.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::dataset::Dataset;
use crate::error::{domain, Result};
use crate::math;
use crate::rng::{child_seed, rng_from_seed};

/// A three-way partition of instance indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    /// Stratification warnings, e.g. a class missing from a partition.
    pub warnings: Vec<String>,
}

/// Cross-validation fold assignment, one fold index per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    n_folds: usize,
    fold_assignments: Vec<u32>,
    seed: u64,
}

/// A with-replacement resample of `0..len`, the same length as its source.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSample {
    pub indices: Vec<usize>,
    pub seed: u64,
}

/// Largest-remainder allocation of `target` slots across classes with the
/// given available counts, proportional to `weights`. Ties in fractional
/// parts go to the lower class index.
fn allocate_proportional(weights: &[usize], available: &[usize], target: usize) -> Vec<usize> {
    let total: usize = weights.iter().sum();
    let k = weights.len();
    let mut out = vec![0usize; k];
    if total == 0 || target == 0 {
        return out;
    }
    let mut fracs: Vec<(f64, usize)> = Vec::with_capacity(k);
    let mut assigned = 0usize;
    for c in 0..k {
        let quota = target as f64 * weights[c] as f64 / total as f64;
        let base = (math::floor(quota) as usize).min(available[c]);
        out[c] = base;
        assigned += base;
        fracs.push((quota - base as f64, c));
    }
    // Sort by fractional part descending, class index ascending.
    fracs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut remaining = target.saturating_sub(assigned);
    while remaining > 0 {
        let mut progressed = false;
        for &(_, c) in &fracs {
            if remaining == 0 {
                break;
            }
            if out[c] < available[c] {
                out[c] += 1;
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break; // every class exhausted
        }
    }
    out
}

/// Indices of each class, shuffled deterministically per class.
fn shuffled_class_indices(y: &[u8], seed: u64) -> [Vec<usize>; 2] {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &label) in y.iter().enumerate() {
        by_class[label as usize].push(i);
    }
    for (c, idx) in by_class.iter_mut().enumerate() {
        let mut rng = rng_from_seed(child_seed(seed, &[0x5C1A, c as u64]));
        idx.shuffle(&mut rng);
    }
    by_class
}

fn rounded_size(x: f64) -> usize {
    math::round(x) as usize
}

/// Stratified three-way split. Global partition sizes are fixed first
/// (validation and test rounded to the nearest instance, remainder to
/// training) and then distributed across classes by largest remainder, so
/// each class is represented proportionally wherever counts permit.
pub fn split_train_val_test(d: &Dataset, alpha: f64, beta: f64, seed: u64) -> Result<SplitPlan> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must be in (0, 1), got {alpha}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain(format!("beta must be in (0, 1], got {beta}")));
    }
    let n = d.n_instances();
    if n == 0 {
        return Err(domain("cannot split an empty dataset"));
    }
    let n_test = rounded_size((1.0 - alpha) * n as f64).min(n);
    let n_val = rounded_size(alpha * (1.0 - beta) * n as f64).min(n - n_test);

    let by_class = shuffled_class_indices(d.y(), seed);
    let class_sizes = [by_class[0].len(), by_class[1].len()];

    let test_alloc = allocate_proportional(&class_sizes, &class_sizes, n_test);
    let remaining = [
        class_sizes[0] - test_alloc[0],
        class_sizes[1] - test_alloc[1],
    ];
    let val_alloc = allocate_proportional(&class_sizes, &remaining, n_val);

    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    let mut test_idx = Vec::new();
    for c in 0..2 {
        let idx = &by_class[c];
        let t = test_alloc[c];
        let v = val_alloc[c];
        test_idx.extend_from_slice(&idx[..t]);
        val_idx.extend_from_slice(&idx[t..t + v]);
        train_idx.extend_from_slice(&idx[t + v..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    test_idx.sort_unstable();

    let mut warnings = Vec::new();
    for (name, part) in [("train", &train_idx), ("val", &val_idx), ("test", &test_idx)] {
        if part.is_empty() {
            continue;
        }
        for c in 0..2u8 {
            if class_sizes[c as usize] > 0 && !part.iter().any(|&i| d.y()[i] == c) {
                warnings.push(format!("class {c} absent from {name} partition"));
            }
        }
    }

    Ok(SplitPlan {
        train_idx,
        val_idx,
        test_idx,
        alpha,
        beta,
        seed,
        warnings,
    })
}

/// Stratified two-way split of a dataset into train (`beta`) and validation
/// (`1 - beta`) parts; used inside cross-validation folds where the test
/// part is the held-out fold.
pub fn split_train_val(d: &Dataset, beta: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain(format!("beta must be in (0, 1], got {beta}")));
    }
    let n = d.n_instances();
    let n_val = rounded_size((1.0 - beta) * n as f64).min(n);
    let by_class = shuffled_class_indices(d.y(), seed);
    let class_sizes = [by_class[0].len(), by_class[1].len()];
    let val_alloc = allocate_proportional(&class_sizes, &class_sizes, n_val);
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for c in 0..2 {
        let idx = &by_class[c];
        val_idx.extend_from_slice(&idx[..val_alloc[c]]);
        train_idx.extend_from_slice(&idx[val_alloc[c]..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    Ok((train_idx, val_idx))
}

/// Stratified k-fold assignment. Shuffled per-class index lists are dealt
/// round-robin with a running fold offset, which keeps both overall fold
/// sizes and per-class fold counts within one of each other.
pub fn make_folds(d: &Dataset, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(domain(format!("n_folds must be >= 2, got {n_folds}")));
    }
    if n_folds > d.n_instances() {
        return Err(domain(format!(
            "n_folds {n_folds} exceeds instance count {}",
            d.n_instances()
        )));
    }
    let by_class = shuffled_class_indices(d.y(), child_seed(seed, &[0xF01D]));
    let mut fold_assignments = vec![0u32; d.n_instances()];
    let mut next_fold = 0usize;
    for idx in &by_class {
        for &i in idx {
            fold_assignments[i] = next_fold as u32;
            next_fold = (next_fold + 1) % n_folds;
        }
    }
    Ok(FoldPlan {
        n_folds,
        fold_assignments,
        seed,
    })
}

impl FoldPlan {
    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn fold_assignments(&self) -> &[u32] {
        &self.fold_assignments
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Instances assigned to fold `f` (the held-out part).
    pub fn fold_indices(&self, f: usize) -> Vec<usize> {
        self.fold_assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a as usize == f)
            .map(|(i, _)| i)
            .collect()
    }

    /// Instances not in fold `f`.
    pub fn complement_indices(&self, f: usize) -> Vec<usize> {
        self.fold_assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a as usize != f)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Uniform with-replacement sample of `train_size` indices.
pub fn bootstrap_sample(train_size: usize, seed: u64) -> Result<BootstrapSample> {
    if train_size == 0 {
        return Err(domain("bootstrap source must be nonempty"));
    }
    let mut rng = rng_from_seed(seed);
    let indices = (0..train_size)
        .map(|_| rng.gen_range(0..train_size))
        .collect();
    Ok(BootstrapSample {
        indices,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;
    use alloc::collections::BTreeSet;

    fn dataset(n: usize, positives: usize) -> Dataset {
        let x = SparseMatrix::from_triplets(n, 2, &[(0, 0, 1.0)]).unwrap();
        let mut y = vec![0u8; n];
        for l in y.iter_mut().take(positives) {
            *l = 1;
        }
        Dataset::with_default_names(x, y).unwrap()
    }

    #[test]
    fn split_sizes_match_alpha_beta() {
        let d = dataset(100, 40);
        let p = split_train_val_test(&d, 0.8, 0.8, 7).unwrap();
        assert_eq!(p.train_idx.len(), 64);
        assert_eq!(p.val_idx.len(), 16);
        assert_eq!(p.test_idx.len(), 20);
    }

    #[test]
    fn beta_one_gives_empty_validation() {
        let d = dataset(50, 20);
        let p = split_train_val_test(&d, 0.8, 1.0, 7).unwrap();
        assert!(p.val_idx.is_empty());
        assert_eq!(p.train_idx.len(), 40);
        assert_eq!(p.test_idx.len(), 10);
    }

    #[test]
    fn split_is_deterministic() {
        let d = dataset(73, 31);
        let a = split_train_val_test(&d, 0.8, 0.8, 123).unwrap();
        let b = split_train_val_test(&d, 0.8, 0.8, 123).unwrap();
        assert_eq!(a, b);
        let c = split_train_val_test(&d, 0.8, 0.8, 124).unwrap();
        assert_ne!(a.train_idx, c.train_idx);
    }

    #[test]
    fn split_partitions_exactly_over_many_seeds() {
        let d = dataset(53, 17);
        for seed in 0..1000u64 {
            let p = split_train_val_test(&d, 0.7, 0.9, seed).unwrap();
            let mut all: Vec<usize> = p
                .train_idx
                .iter()
                .chain(&p.val_idx)
                .chain(&p.test_idx)
                .copied()
                .collect();
            all.sort_unstable();
            assert_eq!(all, (0..53).collect::<Vec<_>>(), "seed {seed}");
        }
    }

    #[test]
    fn split_is_stratified() {
        let d = dataset(100, 30);
        let p = split_train_val_test(&d, 0.8, 0.8, 3).unwrap();
        let pos = |idx: &[usize]| idx.iter().filter(|&&i| d.y()[i] == 1).count();
        assert_eq!(pos(&p.test_idx), 6);
        assert!((pos(&p.val_idx) as i64 - 5).abs() <= 1);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn fold_sizes_differ_by_at_most_one() {
        let d = dataset(10, 4);
        let plan = make_folds(&d, 5, 9).unwrap();
        for f in 0..5 {
            assert_eq!(plan.fold_indices(f).len(), 2);
        }
    }

    #[test]
    fn folds_partition_instances_over_many_seeds() {
        let d = dataset(29, 13);
        for seed in 0..1000u64 {
            let plan = make_folds(&d, 4, seed).unwrap();
            let mut seen = BTreeSet::new();
            let mut sizes = Vec::new();
            for f in 0..4 {
                let idx = plan.fold_indices(f);
                sizes.push(idx.len());
                for i in idx {
                    assert!(seen.insert(i), "seed {seed}: duplicate instance");
                }
            }
            assert_eq!(seen.len(), 29, "seed {seed}");
            let max = *sizes.iter().max().unwrap();
            let min = *sizes.iter().min().unwrap();
            assert!(max - min <= 1, "seed {seed}: fold sizes {sizes:?}");
        }
    }

    #[test]
    fn folds_are_stratified_on_balanced_data() {
        let d = dataset(20, 10);
        let plan = make_folds(&d, 5, 17).unwrap();
        let mut pos_counts = Vec::new();
        for f in 0..5 {
            pos_counts.push(
                plan.fold_indices(f)
                    .iter()
                    .filter(|&&i| d.y()[i] == 1)
                    .count(),
            );
        }
        let max = *pos_counts.iter().max().unwrap();
        let min = *pos_counts.iter().min().unwrap();
        assert!(max - min <= 1, "positive counts {pos_counts:?}");
    }

    #[test]
    fn fold_count_bounds_enforced() {
        let d = dataset(4, 2);
        assert!(make_folds(&d, 1, 0).is_err());
        assert!(make_folds(&d, 5, 0).is_err());
    }

    #[test]
    fn bootstrap_of_one_is_the_only_draw() {
        let s = bootstrap_sample(1, 99).unwrap();
        assert_eq!(s.indices, vec![0]);
    }

    #[test]
    fn bootstrap_distinct_fraction_near_632() {
        let n = 1000;
        let mut total = 0.0;
        let draws = 1000;
        for seed in 0..draws {
            let s = bootstrap_sample(n, seed).unwrap();
            let distinct: BTreeSet<usize> = s.indices.iter().copied().collect();
            total += distinct.len() as f64 / n as f64;
        }
        let mean = total / draws as f64;
        assert!((mean - 0.632).abs() < 0.02, "mean distinct fraction {mean}");
    }

    #[test]
    fn bootstrap_seeds_produce_distinct_samples() {
        let a = bootstrap_sample(1000, 1).unwrap();
        let b = bootstrap_sample(1000, 2).unwrap();
        assert_ne!(a.indices, b.indices);
        let c = bootstrap_sample(1000, 1).unwrap();
        assert_eq!(a.indices, c.indices);
    }

    #[test]
    fn split_train_val_covers_everything() {
        let d = dataset(41, 11);
        let (tr, va) = split_train_val(&d, 0.8, 5).unwrap();
        let mut all: Vec<usize> = tr.iter().chain(&va).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..41).collect::<Vec<_>>());
        assert_eq!(va.len(), 8);
    }
}
