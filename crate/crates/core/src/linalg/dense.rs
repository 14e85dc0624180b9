//! Small dense kernels backing the singular-value estimators: row-major
//! storage, partially pivoted LU, and a one-sided Jacobi SVD. None of this
//! is exposed outside the crate.

use super::LinalgError;

#[derive(Clone, Debug)]
pub(crate) struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub(crate) fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n_rows * n_cols);
        Self {
            n_rows,
            n_cols,
            data,
        }
    }

    #[inline]
    pub(crate) fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n_cols + c]
    }

}

/// Partially pivoted LU factorization `PA = LU` stored in-place.
/// `perm[i]` is the original row index now living at position `i`.
pub(crate) struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

pub(crate) fn lu_factor(m: &DenseMatrix) -> Result<LuFactors, LinalgError> {
    if m.n_rows != m.n_cols {
        return Err(LinalgError::NotSquare {
            n_rows: m.n_rows,
            n_cols: m.n_cols,
        });
    }
    let n = m.n_rows;
    let mut lu = m.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = lu.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let pivot_floor = scale * f64::EPSILON * (n as f64);
    for k in 0..n {
        // pick pivot row
        let mut p = k;
        let mut best = lu[k * n + k].abs();
        for r in (k + 1)..n {
            let cand = lu[r * n + k].abs();
            if cand > best {
                best = cand;
                p = r;
            }
        }
        if best <= pivot_floor {
            return Err(LinalgError::SingularMatrix);
        }
        if p != k {
            for c in 0..n {
                lu.swap(k * n + c, p * n + c);
            }
            perm.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for r in (k + 1)..n {
            let factor = lu[r * n + k] / pivot;
            lu[r * n + k] = factor;
            if factor != 0.0 {
                for c in (k + 1)..n {
                    lu[r * n + c] -= factor * lu[k * n + c];
                }
            }
        }
    }
    Ok(LuFactors { n, lu, perm })
}

impl LuFactors {
    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward: L y = Pb (unit diagonal)
        for r in 1..n {
            let mut acc = x[r];
            for c in 0..r {
                acc -= self.lu[r * n + c] * x[c];
            }
            x[r] = acc;
        }
        // backward: U x = y
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in (r + 1)..n {
                acc -= self.lu[r * n + c] * x[c];
            }
            x[r] = acc / self.lu[r * n + r];
        }
        x
    }

    /// Solves `Aᵀ x = b` using the same factors: `Aᵀ = Uᵀ Lᵀ P`.
    pub(crate) fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut w = b.to_vec();
        // forward: Uᵀ v = b (Uᵀ is lower triangular)
        for r in 0..n {
            let mut acc = w[r];
            for c in 0..r {
                acc -= self.lu[c * n + r] * w[c];
            }
            w[r] = acc / self.lu[r * n + r];
        }
        // backward: Lᵀ w = v (Lᵀ is unit upper triangular)
        for r in (0..n).rev() {
            let mut acc = w[r];
            for c in (r + 1)..n {
                acc -= self.lu[c * n + r] * w[c];
            }
            w[r] = acc;
        }
        // x = Pᵀ w
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }
}

/// Singular values by one-sided (Hestenes) Jacobi rotations on columns.
/// Returns values sorted ascending plus a convergence flag.
pub(crate) fn jacobi_singular_values(
    m: &DenseMatrix,
    tol: f64,
    max_sweeps: usize,
) -> (Vec<f64>, usize, bool) {
    let n_rows = m.n_rows;
    let n_cols = m.n_cols;
    // column-major copy: cols[j] is the j-th column
    let mut cols: Vec<Vec<f64>> = (0..n_cols)
        .map(|j| (0..n_rows).map(|i| m.at(i, j)).collect())
        .collect();
    let mut sweeps = 0;
    let mut converged = false;
    let off_tol = tol.max(1e-15);
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n_cols {
            for q in (p + 1)..n_cols {
                let (mut app, mut aqq, mut apq) = (0.0f64, 0.0f64, 0.0f64);
                for i in 0..n_rows {
                    let (a, b) = (cols[p][i], cols[q][i]);
                    app += a * a;
                    aqq += b * b;
                    apq += a * b;
                }
                if apq.abs() <= off_tol * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n_rows {
                    let (a, b) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * a - s * b;
                    cols[q][i] = s * a + c * b;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    let mut sigmas: Vec<f64> = cols
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sigmas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (sigmas, sweeps, converged)
}
