//! Minimal dense-vector and sparse-matrix kernels.
//!
//! This module deliberately covers only what the solver stack needs: dense
//! vectors with finite entries, square-ish sparse matrices in compressed
//! sparse row form, extremal singular-value estimation, and Matrix Market
//! I/O for instances. It is not a general linear algebra library.

mod csr;
mod dense;
mod market;
mod sigma;
mod vector;

pub use csr::CsrMatrix;
pub use market::{read_matrix_market, read_matrix_market_file, write_matrix_market, write_matrix_market_file};
pub use sigma::{sigma_extremes, sigma_extremes_with, sigma_max, SigmaEstimate, SigmaOptions};
pub use vector::DenseVector;

pub(crate) use dense::DenseMatrix;

use thiserror::Error;

/// Errors from vector/matrix construction and kernels.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {context} expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("vector must have at least one entry")]
    EmptyVector,
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
    #[error("matrix must be square ({n_rows}x{n_cols})")]
    NotSquare { n_rows: usize, n_cols: usize },
    #[error("matrix is numerically singular")]
    SingularMatrix,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("Matrix Market parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Euclidean norm `sqrt(Σ x_i²)`.
pub fn norm2(x: &DenseVector) -> f64 {
    x.norm2()
}

/// Compensated (Kahan) summation. Used where the plain left-to-right sum
/// would lose the low-order bits that feasibility margins are measured in.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_lost_bits() {
        // 1 + 1e-16 * 10_000 loses everything in naive order at once.
        let mut values = vec![1.0];
        values.extend(std::iter::repeat_n(1e-16, 10_000));
        let naive: f64 = values.iter().sum();
        let compensated = kahan_sum(values.iter().copied());
        assert!((compensated - (1.0 + 1e-12)).abs() < 1e-15);
        // The naive sum may or may not be exact depending on the platform;
        // the compensated one must be.
        let _ = naive;
    }
}
