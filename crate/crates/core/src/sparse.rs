//! Compressed sparse-row matrix.
//!
//! `SparseMatrix` is the carrier for fine-grained feature data: `n` rows
//! (instances) by `m` columns (features), with only the nonzero entries
//! stored. The representation is the classic CSR triple:
//!
//! ```text
//! row_offsets : n_rows + 1 offsets into the entry arrays
//! col_indices : column of each stored entry, strictly increasing per row
//! values      : stored entry values, finite and nonzero
//! ```
//!
//! All constructors validate those invariants; a constructed matrix is
//! immutable and safe to share across threads.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n_cols > u32::MAX as usize {
            return Err(domain(format!("n_cols {n_cols} exceeds the u32 column limit")));
        }
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::Dimension {
                what: "row_offsets length",
                expected: n_rows + 1,
                got: row_offsets.len(),
            });
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != values.len() {
            return Err(domain("row_offsets must start at 0 and end at nnz"));
        }
        if col_indices.len() != values.len() {
            return Err(Error::Dimension {
                what: "col_indices length",
                expected: values.len(),
                got: col_indices.len(),
            });
        }
        for i in 0..n_rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(domain(format!("row_offsets decrease at row {i}")));
            }
            let mut prev: Option<u32> = None;
            for e in lo..hi {
                let c = col_indices[e];
                if c as usize >= n_cols {
                    return Err(domain(format!(
                        "column index {c} out of range in row {i} (n_cols {n_cols})"
                    )));
                }
                if let Some(p) = prev {
                    if c <= p {
                        return Err(domain(format!(
                            "column indices not strictly increasing in row {i}"
                        )));
                    }
                }
                prev = Some(c);
                let v = values[e];
                if !v.is_finite() {
                    return Err(domain(format!("non-finite value in row {i}")));
                }
                if v == 0.0 {
                    return Err(domain(format!("explicitly stored zero in row {i}")));
                }
            }
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets. Zero values are
    /// dropped; duplicate `(row, col)` pairs and non-finite values are
    /// rejected.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(domain(format!("triplet ({r}, {c}) out of bounds")));
            }
            if !v.is_finite() {
                return Err(domain(format!("non-finite value at ({r}, {c})")));
            }
            if v != 0.0 {
                entries.push((r, c, v));
            }
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(domain(format!(
                    "duplicate entry at ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_offsets = vec![0usize; n_rows + 1];
        for &(r, _, _) in &entries {
            row_offsets[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = entries.iter().map(|&(_, c, _)| c as u32).collect();
        let values = entries.iter().map(|&(_, _, v)| v).collect();
        SparseMatrix::from_csr(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Builds a matrix from dense rows, dropping zeros. Handy in tests.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(domain(format!("ragged dense input at row {i}")));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(n_rows, n_cols, &triplets)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `i` as parallel column/value slices.
    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Value at `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Number of stored entries per row ("active features per instance").
    pub fn row_active_counts(&self) -> Vec<u32> {
        (0..self.n_rows)
            .map(|i| (self.row_offsets[i + 1] - self.row_offsets[i]) as u32)
            .collect()
    }

    /// Sparsity statistic `rho = 1 - nnz / (n * m)`.
    pub fn sparsity(&self) -> f64 {
        let cells = self.n_rows as f64 * self.n_cols as f64;
        if cells == 0.0 {
            return 0.0;
        }
        1.0 - self.nnz() as f64 / cells
    }

    /// New matrix formed by the given rows, in order. Indices may repeat
    /// (bootstrap resampling) and must be in bounds.
    pub fn select_rows(&self, rows: &[usize]) -> Result<SparseMatrix> {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0usize);
        let mut nnz = 0usize;
        for &r in rows {
            if r >= self.n_rows {
                return Err(domain(format!("row index {r} out of bounds")));
            }
            nnz += self.row_offsets[r + 1] - self.row_offsets[r];
            row_offsets.push(nnz);
        }
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for &r in rows {
            let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
            col_indices.extend_from_slice(&self.col_indices[lo..hi]);
            values.extend_from_slice(&self.values[lo..hi]);
        }
        Ok(SparseMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// `self * dense`, where `dense` is `n_cols x l`; returns `n_rows x l`.
    pub fn mul_dense(&self, dense: &crate::DenseMatrix) -> Result<crate::DenseMatrix> {
        if dense.n_rows() != self.n_cols {
            return Err(Error::Dimension {
                what: "sparse * dense inner dimension",
                expected: self.n_cols,
                got: dense.n_rows(),
            });
        }
        let l = dense.n_cols();
        let mut out = crate::DenseMatrix::zeros(self.n_rows, l);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let orow = out.row_mut(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let drow = dense.row(c as usize);
                for (o, &d) in orow.iter_mut().zip(drow) {
                    *o += v * d;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * dense`, where `dense` is `n_rows x l`; returns `n_cols x l`.
    pub fn t_mul_dense(&self, dense: &crate::DenseMatrix) -> Result<crate::DenseMatrix> {
        if dense.n_rows() != self.n_rows {
            return Err(Error::Dimension {
                what: "sparse^T * dense inner dimension",
                expected: self.n_rows,
                got: dense.n_rows(),
            });
        }
        let l = dense.n_cols();
        let mut out = crate::DenseMatrix::zeros(self.n_cols, l);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let drow = dense.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let orow = out.row_mut(c as usize);
                for (o, &d) in orow.iter_mut().zip(drow) {
                    *o += v * d;
                }
            }
        }
        Ok(out)
    }

    /// Sum of squared stored values.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Applies tf-idf weighting followed by row-wise L2 normalization.
///
/// The term frequency is the raw count; the inverse document frequency is
/// the smooth variant `idf(t) = ln((1 + n) / (1 + df_t)) + 1`, so terms
/// present in every document keep weight 1 rather than vanishing. Rows with
/// no stored terms stay empty; the sparsity pattern is unchanged.
pub fn tfidf_transform(counts: &SparseMatrix) -> Result<SparseMatrix> {
    if counts.values.iter().any(|&v| v < 0.0) {
        return Err(domain("tf-idf input must be nonnegative counts"));
    }
    let n = counts.n_rows as f64;
    let mut df = vec![0u32; counts.n_cols];
    for &c in &counts.col_indices {
        df[c as usize] += 1;
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| math::ln((1.0 + n) / (1.0 + d as f64)) + 1.0)
        .collect();

    let mut values = counts.values.clone();
    for i in 0..counts.n_rows {
        let (lo, hi) = (counts.row_offsets[i], counts.row_offsets[i + 1]);
        let mut norm_sq = 0.0;
        for e in lo..hi {
            let v = values[e] * idf[counts.col_indices[e] as usize];
            values[e] = v;
            norm_sq += v * v;
        }
        if norm_sq > 0.0 {
            let norm = math::sqrt(norm_sq);
            for v in &mut values[lo..hi] {
                *v /= norm;
            }
        }
    }
    SparseMatrix::from_csr(
        counts.n_rows,
        counts.n_cols,
        counts.row_offsets.clone(),
        counts.col_indices.clone(),
        values,
    )
}

/// Human-readable rendering used by error paths in the companion crate.
pub fn describe_shape(m: &SparseMatrix) -> String {
    format!("{}x{} ({} stored)", m.n_rows(), m.n_cols(), m.nnz())
}
