use serde::{Deserialize, Serialize};

use super::{DenseVector, LinalgError};

/// Sparse matrix in compressed sparse row form.
///
/// Structural invariants, checked on construction:
/// * `row_ptr` is non-decreasing with `row_ptr[0] = 0` and
///   `row_ptr[n_rows] = nnz`;
/// * column indices are strictly increasing within each row and in
///   `[0, n_cols)`;
/// * all stored values are finite.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, validating every invariant.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        if n_rows == 0 || n_cols == 0 {
            return Err(LinalgError::InvalidCsr("zero dimension".into()));
        }
        if row_ptr.len() != n_rows + 1 {
            return Err(LinalgError::InvalidCsr(format!(
                "row_ptr length {} does not match n_rows + 1 = {}",
                row_ptr.len(),
                n_rows + 1
            )));
        }
        if row_ptr[0] != 0 {
            return Err(LinalgError::InvalidCsr("row_ptr[0] must be 0".into()));
        }
        if col_idx.len() != values.len() {
            return Err(LinalgError::InvalidCsr(
                "col_idx and values lengths differ".into(),
            ));
        }
        if *row_ptr.last().unwrap() != col_idx.len() {
            return Err(LinalgError::InvalidCsr(
                "row_ptr[n_rows] must equal nnz".into(),
            ));
        }
        for r in 0..n_rows {
            if row_ptr[r] > row_ptr[r + 1] {
                return Err(LinalgError::InvalidCsr(format!(
                    "row_ptr decreases at row {r}"
                )));
            }
            let mut prev: Option<usize> = None;
            for k in row_ptr[r]..row_ptr[r + 1] {
                let c = col_idx[k];
                if c >= n_cols {
                    return Err(LinalgError::InvalidCsr(format!(
                        "column index {c} out of range in row {r}"
                    )));
                }
                if let Some(p) = prev {
                    if c <= p {
                        return Err(LinalgError::InvalidCsr(format!(
                            "column indices not strictly increasing in row {r}"
                        )));
                    }
                }
                prev = Some(c);
            }
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { index });
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a matrix from (row, col, value) triplets. Duplicate positions
    /// are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(LinalgError::InvalidCsr(format!(
                    "triplet ({r}, {c}) out of bounds for {n_rows}x{n_cols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let col_idx = merged.iter().map(|t| t.1).collect();
        let values = merged.iter().map(|t| t.2).collect();
        Self::from_parts(n_rows, n_cols, row_ptr, col_idx, values)
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    /// Diagonal matrix from entries (zeros kept structurally).
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        assert!(n >= 1, "diagonal must be nonempty");
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    /// Iterates `(row, col, value)` over stored entries in row-major order.
    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// `A x`.
    pub fn matvec(&self, x: &DenseVector) -> Result<DenseVector, LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                context: "matvec",
                expected: self.n_cols,
                found: x.len(),
            });
        }
        let xs = x.as_slice();
        let mut out = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * xs[c];
            }
            out[r] = acc;
        }
        Ok(DenseVector::new(out).expect("finite by construction"))
    }

    /// `Aᵀ x`.
    pub fn matvec_transpose(&self, x: &DenseVector) -> Result<DenseVector, LinalgError> {
        if x.len() != self.n_rows {
            return Err(LinalgError::DimensionMismatch {
                context: "matvec_transpose",
                expected: self.n_rows,
                found: x.len(),
            });
        }
        let xs = x.as_slice();
        let mut out = vec![0.0; self.n_cols];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let xr = xs[r];
            for (&c, &v) in cols.iter().zip(vals) {
                out[c] += v * xr;
            }
        }
        Ok(DenseVector::new(out).expect("finite by construction"))
    }

    /// Returns a copy with `value` multiplied into every stored entry.
    pub fn scaled(&self, scale: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= scale;
        }
        out
    }

    /// Returns `self − diag(d)`. Positions where `d` is nonzero are inserted
    /// into the pattern if missing; existing diagonal entries are adjusted in
    /// place, so the common case of a structurally present diagonal allocates
    /// nothing beyond the copy.
    pub fn subtract_diagonal(&self, d: &[f64]) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                n_rows: self.n_rows,
                n_cols: self.n_cols,
            });
        }
        if d.len() != self.n_rows {
            return Err(LinalgError::DimensionMismatch {
                context: "subtract_diagonal",
                expected: self.n_rows,
                found: d.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + self.n_rows);
        let mut values = Vec::with_capacity(self.nnz() + self.n_rows);
        row_ptr.push(0);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut inserted = d[r] == 0.0 || cols.binary_search(&r).is_ok();
            for (&c, &v) in cols.iter().zip(vals) {
                if !inserted && c > r {
                    col_idx.push(r);
                    values.push(-d[r]);
                    inserted = true;
                }
                col_idx.push(c);
                values.push(if c == r { v - d[r] } else { v });
            }
            if !inserted {
                col_idx.push(r);
                values.push(-d[r]);
            }
            row_ptr.push(col_idx.len());
        }
        Self::from_parts(self.n_rows, self.n_cols, row_ptr, col_idx, values)
    }

    /// Densifies into a row-major buffer. Intended for small matrices only.
    pub(crate) fn to_dense(&self) -> super::DenseMatrix {
        let mut data = vec![0.0; self.n_rows * self.n_cols];
        for (r, c, v) in self.iter_entries() {
            data[r * self.n_cols + c] = v;
        }
        super::DenseMatrix::new(self.n_rows, self.n_cols, data)
    }
}
