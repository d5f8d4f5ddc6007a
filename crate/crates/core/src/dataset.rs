//! Labeled sparse dataset.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::sparse::SparseMatrix;

/// Binary class label, exactly 0 or 1.
pub type Label = u8;

/// A sparse feature matrix with binary labels and naming metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: SparseMatrix,
    y: Vec<Label>,
    feature_names: Vec<String>,
    instance_ids: Vec<String>,
}

/// Summary statistics of a dataset: size, positive fraction `b`, and
/// sparsity `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub n_instances: usize,
    pub n_features: usize,
    pub positive_fraction: f64,
    pub sparsity: f64,
}

impl Dataset {
    pub fn new(
        x: SparseMatrix,
        y: Vec<Label>,
        feature_names: Vec<String>,
        instance_ids: Vec<String>,
    ) -> Result<Self> {
        if y.len() != x.n_rows() {
            return Err(Error::Dimension {
                what: "label array length",
                expected: x.n_rows(),
                got: y.len(),
            });
        }
        if let Some(bad) = y.iter().find(|&&l| l > 1) {
            return Err(domain(format!("label {bad} is not binary")));
        }
        if feature_names.len() != x.n_cols() {
            return Err(Error::Dimension {
                what: "feature_names length",
                expected: x.n_cols(),
                got: feature_names.len(),
            });
        }
        if instance_ids.len() != x.n_rows() {
            return Err(Error::Dimension {
                what: "instance_ids length",
                expected: x.n_rows(),
                got: instance_ids.len(),
            });
        }
        Ok(Dataset {
            x,
            y,
            feature_names,
            instance_ids,
        })
    }

    /// Convenience constructor with generated `f1..fm` feature names and
    /// row-number instance ids.
    pub fn with_default_names(x: SparseMatrix, y: Vec<Label>) -> Result<Self> {
        let feature_names = (1..=x.n_cols()).map(|j| format!("f{j}")).collect();
        let instance_ids = (0..x.n_rows()).map(|i| format!("{i}")).collect();
        Dataset::new(x, y, feature_names, instance_ids)
    }

    pub fn x(&self) -> &SparseMatrix {
        &self.x
    }

    pub fn y(&self) -> &[Label] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn n_instances(&self) -> usize {
        self.x.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.y.is_empty() {
            return 0.0;
        }
        self.y.iter().filter(|&&l| l == 1).count() as f64 / self.y.len() as f64
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            n_instances: self.n_instances(),
            n_features: self.n_features(),
            positive_fraction: self.positive_fraction(),
            sparsity: self.x.sparsity(),
        }
    }

    /// Replaces the feature matrix (same shape), keeping labels and names.
    /// Used for corpus-level reweighting such as tf-idf.
    pub fn with_matrix(&self, x: SparseMatrix) -> Result<Dataset> {
        if x.n_rows() != self.x.n_rows() || x.n_cols() != self.x.n_cols() {
            return Err(domain("replacement matrix must have the same shape"));
        }
        Dataset::new(
            x,
            self.y.clone(),
            self.feature_names.clone(),
            self.instance_ids.clone(),
        )
    }

    /// New dataset consisting of the given rows, in order.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let x = self.x.select_rows(rows)?;
        let mut y = Vec::with_capacity(rows.len());
        let mut ids = Vec::with_capacity(rows.len());
        for &r in rows {
            y.push(self.y[r]);
            ids.push(self.instance_ids[r].clone());
        }
        Dataset::new(x, y, self.feature_names.clone(), ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_non_binary_labels_and_bad_lengths() {
        let x = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(Dataset::with_default_names(x.clone(), vec![0, 2]).is_err());
        assert!(Dataset::with_default_names(x, vec![0]).is_err());
    }

    #[test]
    fn stats_are_derivable() {
        let x = SparseMatrix::from_triplets(4, 5, &[(0, 0, 1.0), (1, 2, 1.0), (2, 4, 1.0)])
            .unwrap();
        let d = Dataset::with_default_names(x, vec![1, 0, 0, 1]).unwrap();
        let s = d.stats();
        assert_eq!(s.n_instances, 4);
        assert_eq!(s.n_features, 5);
        assert!((s.positive_fraction - 0.5).abs() < 1e-12);
        assert!((s.sparsity - (1.0 - 3.0 / 20.0)).abs() < 1e-12);
    }

    #[test]
    fn subset_preserves_labels_and_ids() {
        let x = SparseMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (2, 1, 4.0)]).unwrap();
        let d = Dataset::with_default_names(x, vec![1, 0, 1]).unwrap();
        let s = d.subset(&[2, 0]).unwrap();
        assert_eq!(s.y(), &[1, 1]);
        assert_eq!(s.instance_ids(), &["2".to_string(), "0".to_string()]);
        assert_eq!(s.x().get(0, 1), 4.0);
    }
}
