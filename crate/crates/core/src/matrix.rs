//! Square sparse matrices in compressed-column layout.
//!
//! Column `i` holds the transitions *out of* source pair `i`; row indices are
//! destinations. Within a column, row indices are strictly increasing.

use alloc::vec;
use alloc::vec::Vec;

use crate::numeric::compensated_sum;
use crate::{Error, PairIndex, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds an `n × n` matrix from per-column `(row, value)` lists. Entries
    /// sharing a row inside one column are summed; explicit zeros are dropped.
    pub fn from_columns(n: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if columns.len() != n {
            return Err(Error::Shape(alloc::format!(
                "expected {n} columns, got {}",
                columns.len()
            )));
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|&(r, _)| r);
            for (r, v) in col {
                if r >= n {
                    return Err(Error::OutOfRange {
                        what: "row",
                        index: r,
                        limit: n,
                    });
                }
                if v == 0.0 {
                    continue;
                }
                if row_idx.len() > *col_ptr.last().unwrap() && *row_idx.last().unwrap() == r {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds from a dense row-major `n × n` buffer (`dense[j * n + i]`).
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::Shape(alloc::format!(
                "dense buffer has {} entries, expected {}",
                dense.len(),
                n * n
            )));
        }
        let columns = (0..n)
            .map(|i| (0..n).map(|j| (j, dense[j * n + i])).collect())
            .collect();
        Self::from_columns(n, columns)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `i`.
    #[inline]
    pub fn column(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[i]..self.col_ptr[i + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (rows, vals) = self.column(col);
        match rows.binary_search(&row) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| compensated_sum(self.column(i).1)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, &xi) in x.iter().enumerate().take(self.n) {
            let (rows, vals) = self.column(i);
            for (&j, &a) in rows.iter().zip(vals) {
                y[j] += a * xi;
            }
        }
        y
    }

    /// `y = Aᵀ x`.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (rows, vals) = self.column(i);
                rows.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for i in 0..self.n {
            let (rows, vals) = self.column(i);
            for (&j, &a) in rows.iter().zip(vals) {
                columns[j].push((i, a));
            }
        }
        // rows are pushed in increasing order of `i`, so columns are sorted
        let mut col_ptr = Vec::with_capacity(self.n + 1);
        let mut row_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        col_ptr.push(0);
        for col in columns {
            for (r, v) in col {
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            n: self.n,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Dense row-major copy (`out[j * n + i] = A[j, i]`).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            let (rows, vals) = self.column(i);
            for (&j, &a) in rows.iter().zip(vals) {
                out[j * self.n + i] = a;
            }
        }
        out
    }

    /// Iterates `(row, col, value)` over stored entries, column by column.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (rows, vals) = self.column(i);
            rows.iter().zip(vals).map(move |(&j, &a)| (j, i, a))
        })
    }

    pub(crate) fn scale_column(&mut self, i: usize, factor: f64) {
        for k in self.col_ptr[i]..self.col_ptr[i + 1] {
            self.values[k] *= factor;
        }
    }
}

/// Column-stochastic matrix over state-action pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    index: PairIndex,
    matrix: CscMatrix,
}

/// Column sums must equal one within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;

impl StochasticMatrix {
    /// Wraps `matrix`, checking entries in `[0, 1]` and unit column sums.
    pub fn new(index: PairIndex, matrix: CscMatrix) -> Result<Self> {
        Self::with_tolerance(index, matrix, STOCHASTIC_TOL)
    }

    pub fn with_tolerance(index: PairIndex, matrix: CscMatrix, tol: f64) -> Result<Self> {
        if matrix.dim() != index.len() {
            return Err(Error::Shape(alloc::format!(
                "matrix dimension {} does not match {} pairs",
                matrix.dim(),
                index.len()
            )));
        }
        for (j, i, a) in matrix.triplets() {
            if !(0.0..=1.0 + tol).contains(&a) {
                return Err(Error::InvalidModel {
                    count: 1,
                    first: alloc::format!("entry ({j}, {i}) = {a} outside [0, 1]"),
                });
            }
        }
        for (i, s) in matrix.column_sums().into_iter().enumerate() {
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidModel {
                    count: 1,
                    first: alloc::format!("column {i} sums to {s}"),
                });
            }
        }
        Ok(Self { index, matrix })
    }

    pub fn index(&self) -> PairIndex {
        self.index
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }

    pub fn get(&self, to: usize, from: usize) -> f64 {
        self.matrix.get(to, from)
    }

    /// Stationary distribution by power iteration on the lazy chain
    /// `(I + P) / 2`, which shares fixed points with `P` and is aperiodic.
    pub fn stationary_distribution(&self, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        let n = self.matrix.dim();
        let mut x = vec![1.0 / n as f64; n];
        for it in 0..max_iter {
            let px = self.matrix.mul_vec(&x);
            let mut next: Vec<f64> = px.iter().zip(&x).map(|(a, b)| 0.5 * (a + b)).collect();
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= total);
            let change = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = next;
            if change < tol {
                return Ok(x);
            }
            if it + 1 == max_iter {
                return Err(Error::NotConverged {
                    iterations: max_iter,
                    residual: change,
                });
            }
        }
        Ok(x)
    }
}
