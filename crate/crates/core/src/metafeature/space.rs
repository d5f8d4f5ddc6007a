//! From factor loadings (or a domain table) to a fitted metafeature space.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{domain, Error, Result};
use crate::metafeature::factor::{
    fit_nmf, fit_svd_with, FactorModel, FactorizationMethod, SvdOptions,
};
use crate::sparse::SparseMatrix;

/// A total map from fine-grained features to metafeatures: every feature
/// belongs to exactly one of the `k` metafeatures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryAssignment {
    assignment: Vec<u32>,
    k: usize,
}

impl BinaryAssignment {
    pub fn new(assignment: Vec<u32>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(domain("assignment needs at least one metafeature"));
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a as usize >= k) {
            return Err(domain(format!("assignment index {bad} out of range (k={k})")));
        }
        Ok(BinaryAssignment {
            assignment,
            k,
        })
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_features(&self) -> usize {
        self.assignment.len()
    }

    /// Features per metafeature; sums to the feature count.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.k];
        for &a in &self.assignment {
            h[a as usize] += 1;
        }
        h
    }
}

/// Derives the feature-to-metafeature assignment from a factor model by
/// taking the argmax of each column of `R`; ties go to the lowest
/// metafeature index. For SVD the argmax is taken over the raw, possibly
/// negative loadings.
pub fn binarize_r(model: &FactorModel) -> BinaryAssignment {
    let k = model.k;
    let m = model.r.n_cols();
    let mut assignment = Vec::with_capacity(m);
    for j in 0..m {
        let mut best_t = 0usize;
        let mut best_v = model.r.get(0, j);
        for t in 1..k {
            let v = model.r.get(t, j);
            if v > best_v {
                best_v = v;
                best_t = t;
            }
        }
        assignment.push(best_t as u32);
    }
    BinaryAssignment {
        assignment,
        k,
    }
}

/// How aggregated metafeature values are post-processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationMode {
    /// Divide each row by its number of active fine-grained features
    /// (the default; for binary input every nonempty row then sums to 1).
    ActiveCount,
    /// Leave the aggregated sums as they are.
    Raw,
    /// Replace nonzero aggregates with 1.
    Binary,
}

/// The metafeature representation of a set of instances.
#[derive(Debug, Clone, PartialEq)]
pub struct MetafeatureMatrix {
    pub values: DenseMatrix,
    pub source_active_counts: Vec<u32>,
    /// Rows with zero active fine-grained features; they stay all-zero.
    pub empty_rows: Vec<u32>,
}

/// Projects instances into metafeature space and normalizes by the number
/// of active fine-grained features per instance.
pub fn project_and_normalize(
    x: &SparseMatrix,
    a: &BinaryAssignment,
) -> Result<MetafeatureMatrix> {
    project_with(x, a, NormalizationMode::ActiveCount)
}

pub fn project_with(
    x: &SparseMatrix,
    a: &BinaryAssignment,
    mode: NormalizationMode,
) -> Result<MetafeatureMatrix> {
    if a.n_features() != x.n_cols() {
        return Err(Error::Dimension {
            what: "assignment feature count",
            expected: x.n_cols(),
            got: a.n_features(),
        });
    }
    let n = x.n_rows();
    let mut values = DenseMatrix::zeros(n, a.k());
    let counts = x.row_active_counts();
    let mut empty_rows = Vec::new();
    for i in 0..n {
        let (cols, vals) = x.row(i);
        let row = values.row_mut(i);
        for (&c, &v) in cols.iter().zip(vals) {
            row[a.assignment[c as usize] as usize] += v;
        }
        match mode {
            NormalizationMode::ActiveCount => {
                if counts[i] > 0 {
                    let d = counts[i] as f64;
                    for v in row.iter_mut() {
                        *v /= d;
                    }
                }
            }
            NormalizationMode::Raw => {}
            NormalizationMode::Binary => {
                for v in row.iter_mut() {
                    *v = if *v != 0.0 { 1.0 } else { 0.0 };
                }
            }
        }
        if counts[i] == 0 {
            empty_rows.push(i as u32);
        }
    }
    Ok(MetafeatureMatrix {
        values,
        source_active_counts: counts,
        empty_rows,
    })
}

/// Provenance of a metafeature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetafeatureKind {
    DataDriven(FactorizationMethod),
    Domain,
}

/// A fitted transformer from fine-grained matrices (with a fixed column
/// set) into the `k`-dimensional metafeature representation. Fitting
/// happens once, on training data; transforming never mutates the space.
#[derive(Debug, Clone, PartialEq)]
pub struct MetafeatureSpace {
    kind: MetafeatureKind,
    assignment: BinaryAssignment,
    /// Per metafeature: member features with their loading, sorted by
    /// descending weight (ties by ascending feature index).
    descriptors: Vec<Vec<(u32, f64)>>,
    names: Option<Vec<String>>,
    /// Features whose winning loading was negative (possible under SVD).
    negative_dominant: Vec<u32>,
    seed: u64,
}

impl MetafeatureSpace {
    pub fn kind(&self) -> MetafeatureKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.assignment.k()
    }

    pub fn n_features(&self) -> usize {
        self.assignment.n_features()
    }

    pub fn assignment(&self) -> &BinaryAssignment {
        &self.assignment
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn negative_dominant(&self) -> &[u32] {
        &self.negative_dominant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Full descriptor of metafeature `j` (all member features, sorted by
    /// descending weight).
    pub fn descriptor(&self, j: usize) -> Result<&[(u32, f64)]> {
        self.descriptors
            .get(j)
            .map(|d| d.as_slice())
            .ok_or_else(|| domain(format!("metafeature index {j} out of range")))
    }

    /// The `n` heaviest member features of metafeature `j`.
    pub fn top_features(&self, j: usize, n: usize) -> Result<Vec<(u32, f64)>> {
        let d = self.descriptor(j)?;
        Ok(d.iter().take(n).copied().collect())
    }

    /// Maps a matrix with the same columns into metafeature space.
    pub fn transform(&self, x: &SparseMatrix) -> Result<MetafeatureMatrix> {
        project_and_normalize(x, &self.assignment)
    }

    pub fn transform_with(
        &self,
        x: &SparseMatrix,
        mode: NormalizationMode,
    ) -> Result<MetafeatureMatrix> {
        project_with(x, &self.assignment, mode)
    }

    /// Rebuilds a space from stored parts (deserialization path).
    pub fn from_parts(
        kind: MetafeatureKind,
        assignment: BinaryAssignment,
        descriptors: Vec<Vec<(u32, f64)>>,
        names: Option<Vec<String>>,
        seed: u64,
    ) -> Result<Self> {
        if descriptors.len() != assignment.k() {
            return Err(Error::Dimension {
                what: "descriptor list length",
                expected: assignment.k(),
                got: descriptors.len(),
            });
        }
        for d in &descriptors {
            for w in d.windows(2) {
                if w[1].1 > w[0].1 {
                    return Err(domain("descriptor weights must be sorted descending"));
                }
            }
            if let Some(&(f, _)) = d.iter().find(|&&(f, _)| f as usize >= assignment.n_features()) {
                return Err(domain(format!("descriptor feature {f} out of range")));
            }
        }
        let negative_dominant = descriptors
            .iter()
            .flat_map(|d| d.iter().filter(|&&(_, w)| w < 0.0).map(|&(f, _)| f))
            .collect();
        Ok(MetafeatureSpace {
            kind,
            assignment,
            descriptors,
            names,
            negative_dominant,
            seed,
        })
    }
}

fn descriptors_from_model(
    model: &FactorModel,
    assignment: &BinaryAssignment,
) -> (Vec<Vec<(u32, f64)>>, Vec<u32>) {
    let mut descriptors = vec![Vec::new(); assignment.k()];
    let mut negative = Vec::new();
    for (f, &mf) in assignment.assignment().iter().enumerate() {
        let w = model.r.get(mf as usize, f);
        descriptors[mf as usize].push((f as u32, w));
        if w < 0.0 {
            negative.push(f as u32);
        }
    }
    for d in descriptors.iter_mut() {
        d.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    }
    (descriptors, negative)
}

/// Factorization knobs used when building data-driven spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorOptions {
    pub nmf_max_iter: usize,
    pub nmf_tol: f64,
    pub svd: SvdOptions,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            nmf_max_iter: 200,
            nmf_tol: 1e-4,
            svd: SvdOptions::default(),
        }
    }
}

/// Builds a data-driven metafeature space on training data with default
/// factorization options.
pub fn build_ddmf(
    x_train: &SparseMatrix,
    k: usize,
    method: FactorizationMethod,
    seed: u64,
) -> Result<MetafeatureSpace> {
    build_ddmf_with(x_train, k, method, seed, &FactorOptions::default())
}

/// Builds a data-driven metafeature space: fit the factor model on the
/// training matrix only, binarize `R` by per-column argmax, and keep the
/// member loadings as descriptors. The returned space transforms any
/// matrix with the same columns through the fixed assignment.
pub fn build_ddmf_with(
    x_train: &SparseMatrix,
    k: usize,
    method: FactorizationMethod,
    seed: u64,
    options: &FactorOptions,
) -> Result<MetafeatureSpace> {
    let model = match method {
        FactorizationMethod::Nmf => {
            fit_nmf(x_train, k, seed, options.nmf_max_iter, options.nmf_tol)?
        }
        FactorizationMethod::Svd => fit_svd_with(x_train, k, seed, &options.svd)?,
    };
    let assignment = binarize_r(&model);
    let (descriptors, negative_dominant) = descriptors_from_model(&model, &assignment);
    Ok(MetafeatureSpace {
        kind: MetafeatureKind::DataDriven(method),
        assignment,
        descriptors,
        names: None,
        negative_dominant,
        seed,
    })
}

/// Builds a domain-based metafeature space from an expert feature-to-group
/// table. Group indices follow first appearance in the table; features not
/// covered by the table are collected into a trailing reserved "other"
/// group. Unknown feature names and duplicate mappings are rejected.
pub fn build_domain_mf(
    map: &[(String, String)],
    feature_names: &[String],
) -> Result<MetafeatureSpace> {
    let name_to_index: BTreeMap<&str, usize> = feature_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    if name_to_index.len() != feature_names.len() {
        return Err(domain("feature names must be unique"));
    }

    let mut group_names: Vec<String> = Vec::new();
    let mut group_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut feature_group: Vec<Option<usize>> = vec![None; feature_names.len()];
    let mut unknown: Vec<&str> = Vec::new();
    let mut duplicates: Vec<&str> = Vec::new();

    for (feature, group) in map {
        let Some(&f) = name_to_index.get(feature.as_str()) else {
            unknown.push(feature);
            continue;
        };
        let g = *group_index.entry(group.as_str()).or_insert_with(|| {
            group_names.push(group.clone());
            group_names.len() - 1
        });
        if feature_group[f].is_some() {
            duplicates.push(feature);
        } else {
            feature_group[f] = Some(g);
        }
    }
    if !unknown.is_empty() {
        return Err(domain(format!(
            "unknown feature names in domain map: {}",
            unknown.join(", ")
        )));
    }
    if !duplicates.is_empty() {
        return Err(domain(format!(
            "features mapped to more than one group: {}",
            duplicates.join(", ")
        )));
    }

    let n_unmapped = feature_group.iter().filter(|g| g.is_none()).count();
    let other = if n_unmapped > 0 {
        group_names.push("other".to_string());
        Some(group_names.len() - 1)
    } else {
        None
    };
    let k = group_names.len();
    if k == 0 {
        return Err(domain("domain map produced no metafeatures"));
    }

    let assignment: Vec<u32> = feature_group
        .iter()
        .map(|g| g.or(other).expect("unmapped features imply an other group") as u32)
        .collect();
    let assignment = BinaryAssignment::new(assignment, k)?;
    let mut descriptors = vec![Vec::new(); k];
    for (f, &mf) in assignment.assignment().iter().enumerate() {
        descriptors[mf as usize].push((f as u32, 1.0));
    }
    Ok(MetafeatureSpace {
        kind: MetafeatureKind::Domain,
        assignment,
        descriptors,
        names: Some(group_names),
        negative_dominant: Vec::new(),
        seed: 0,
    })
}

/// True when the Jaccard overlap of the two descriptors' feature sets
/// reaches the cutoff `c`.
pub fn match_metafeatures(a: &[(u32, f64)], b: &[(u32, f64)], c: f64) -> bool {
    let sa: BTreeSet<u32> = a.iter().map(|&(f, _)| f).collect();
    let sb: BTreeSet<u32> = b.iter().map(|&(f, _)| f).collect();
    if sa.is_empty() && sb.is_empty() {
        return true;
    }
    let inter = sa.intersection(&sb).count() as f64;
    let union = sa.union(&sb).count() as f64;
    inter / union >= c
}
