//! Small row-major dense matrix used for factor models and metafeature
//! matrices. Not a general linear-algebra type; it carries exactly the
//! operations the factorization and projection code needs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::math;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(domain(alloc::format!(
                "dense matrix data length {} does not match {n_rows}x{n_cols}",
                data.len()
            )));
        }
        Ok(DenseMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transposed(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            let row = self.row(i);
            for (j, &v) in row.iter().enumerate() {
                out.data[j * self.n_rows + i] = v;
            }
        }
        out
    }

    /// `self^T * self`, an `n_cols x n_cols` Gram matrix.
    pub fn gram(&self) -> DenseMatrix {
        let k = self.n_cols;
        let mut g = DenseMatrix::zeros(k, k);
        for i in 0..self.n_rows {
            let row = self.row(i);
            for t in 0..k {
                let rt = row[t];
                if rt == 0.0 {
                    continue;
                }
                let grow = &mut g.data[t * k..(t + 1) * k];
                for (s, &rs) in row.iter().enumerate() {
                    grow[s] += rt * rs;
                }
            }
        }
        g
    }

    /// `self * other` for a small right-hand side.
    pub fn mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(crate::Error::Dimension {
                what: "dense matrix product",
                expected: self.n_cols,
                got: other.n_rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            let lrow = self.row(i);
            let orow = &mut out.data[i * other.n_cols..(i + 1) * other.n_cols];
            for (t, &l) in lrow.iter().enumerate() {
                if l == 0.0 {
                    continue;
                }
                let rrow = other.row(t);
                for (j, &r) in rrow.iter().enumerate() {
                    orow[j] += l * r;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Orthonormalizes the columns in place with modified Gram-Schmidt,
    /// re-projecting once for stability. Columns that become numerically
    /// zero (rank deficiency) are left as zero columns.
    pub fn orthonormalize_columns(&mut self) {
        let (n, l) = (self.n_rows, self.n_cols);
        for j in 0..l {
            for _pass in 0..2 {
                for i in 0..j {
                    let mut dot = 0.0;
                    for r in 0..n {
                        dot += self.data[r * l + i] * self.data[r * l + j];
                    }
                    if dot != 0.0 {
                        for r in 0..n {
                            let vi = self.data[r * l + i];
                            self.data[r * l + j] -= dot * vi;
                        }
                    }
                }
            }
            let mut norm_sq = 0.0;
            for r in 0..n {
                let v = self.data[r * l + j];
                norm_sq += v * v;
            }
            let norm = math::sqrt(norm_sq);
            if norm > 1e-300 {
                for r in 0..n {
                    self.data[r * l + j] /= norm;
                }
            } else {
                for r in 0..n {
                    self.data[r * l + j] = 0.0;
                }
            }
        }
    }
}
