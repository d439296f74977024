//! Compressed sparse row operator.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{check_len, Error, Result};

/// Row-compressed sparse matrix with `f64` weights.
///
/// Column indices within a row are strictly increasing, so a column never
/// appears twice in the same row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds an operator from per-row `(column, weight)` lists. Entries in a
    /// row may come in any order; duplicates, out-of-range columns and
    /// non-finite weights are rejected.
    pub fn from_rows(rows: usize, cols: usize, entries: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        check_len(rows, entries.len())?;
        let nnz = entries.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for mut row in entries {
            row.sort_unstable_by_key(|&(c, _)| c);
            for (k, &(c, w)) in row.iter().enumerate() {
                if c >= cols {
                    return Err(Error::DimensionMismatch("column index out of range"));
                }
                if k > 0 && row[k - 1].0 == c {
                    return Err(Error::DimensionMismatch("duplicate column in row"));
                }
                if !w.is_finite() {
                    return Err(Error::NonFinite);
                }
                col_idx.push(c);
                values.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { rows, cols, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and weights of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.rows];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.cols, v.len())?;
        check_len(self.rows, out.len())?;
        for (i, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *o = cols.iter().zip(vals).map(|(&c, &w)| w * v[c]).sum();
        }
        Ok(())
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.cols];
        self.apply_transpose_into(v, &mut out)?;
        Ok(out)
    }

    pub fn apply_transpose_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.rows, v.len())?;
        check_len(self.cols, out.len())?;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &w) in cols.iter().zip(vals) {
                out[c] += w * vi;
            }
        }
        Ok(())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (&c, &w) in self.col_idx.iter().zip(&self.values) {
            sums[c] += w;
        }
        sums
    }

    /// Per-column sum of squared weights, i.e. the diagonal of `AᵀA`.
    pub fn column_square_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (&c, &w) in self.col_idx.iter().zip(&self.values) {
            sums[c] += w * w;
        }
        sums
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &w)| {
                let (tc, tv) = self.row(j);
                matches!(tc.binary_search(&i), Ok(k) if tv[k] == w)
            })
        })
    }

    /// Dense row-major copy. Intended for tests and small oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.rows * self.cols];
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&c, &w) in cols.iter().zip(vals) {
                dense[i * self.cols + c] = w;
            }
        }
        dense
    }

    /// Text dump, one `ROW l: (h, w) ...` line per row.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let _ = write!(out, "ROW {i}:");
            let (cols, vals) = self.row(i);
            for (&c, &w) in cols.iter().zip(vals) {
                let _ = write!(out, " ({c}, {w})");
            }
            out.push('\n');
        }
        out
    }
}
