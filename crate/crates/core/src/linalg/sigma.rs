//! Extremal singular-value estimation for square sparse matrices.
//!
//! Two regimes, switched on the dimension:
//!
//! * `n ≤ dense_cutoff` (512 by default): densify and run a one-sided Jacobi
//!   SVD. Exact up to rotation tolerance; the right choice at desk scale.
//! * larger `n`: power iteration on `AᵀA` for the largest singular value,
//!   and inverse iteration on `AᵀA` (two triangular solves per step against
//!   a pivoted LU of `A`) for the smallest. Inverse iteration is used rather
//!   than a shifted power drive because the spectral gap at the bottom,
//!   relative to a shift of order `σ_max²`, is far too small for the latter
//!   to converge in practice.
//!
//! Estimates from Rayleigh quotients are one-sided: `sigma_max` is approached
//! from below and `sigma_min` from above, both within `tol` once converged.

use serde::{Deserialize, Serialize};

use super::dense::{jacobi_singular_values, lu_factor};
use super::{CsrMatrix, DenseVector, LinalgError};

/// Result of [`sigma_extremes`]. `sigma_min ≤ sigma_max` always holds.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Knobs for [`sigma_extremes_with`].
#[derive(Clone, Copy, Debug)]
pub struct SigmaOptions {
    /// Relative stall tolerance for the iterative estimates.
    pub tol: f64,
    /// Iteration cap per phase (power / inverse iteration), or Jacobi sweeps.
    pub max_iter: usize,
    /// Densify-and-SVD below this dimension. Set to 0 to force the
    /// iterative path regardless of size.
    pub dense_cutoff: usize,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            dense_cutoff: DENSE_CUTOFF,
        }
    }
}

/// Default dimension threshold between the dense SVD path and the
/// iterative path.
pub const DENSE_CUTOFF: usize = 512;

/// Estimates the extreme singular values of a square matrix.
///
/// `tol` is the relative stall tolerance, `max_iter` caps each iterative
/// phase. Returns [`LinalgError::SingularMatrix`] when the inverse-iteration
/// factorization meets a numerically zero pivot.
pub fn sigma_extremes(
    a: &CsrMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<SigmaEstimate, LinalgError> {
    sigma_extremes_with(
        a,
        &SigmaOptions {
            tol,
            max_iter,
            dense_cutoff: DENSE_CUTOFF,
        },
    )
}

/// [`sigma_extremes`] with an explicit dense/iterative cutoff.
pub fn sigma_extremes_with(
    a: &CsrMatrix,
    opts: &SigmaOptions,
) -> Result<SigmaEstimate, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(LinalgError::InvalidParameter("tol must be positive".into()));
    }
    if opts.max_iter == 0 {
        return Err(LinalgError::InvalidParameter(
            "max_iter must be at least 1".into(),
        ));
    }
    let n = a.n_rows();
    if n <= opts.dense_cutoff {
        let (sigmas, sweeps, converged) =
            jacobi_singular_values(&a.to_dense(), opts.tol, opts.max_iter.clamp(10, 60));
        return Ok(SigmaEstimate {
            sigma_min: sigmas[0],
            sigma_max: sigmas[n - 1],
            iterations_used: sweeps,
            converged,
        });
    }

    let (sigma_max, it_max, conv_max) = power_sigma_max(a, opts.tol, opts.max_iter);
    let (sigma_min, it_min, conv_min) = inverse_sigma_min(a, opts.tol, opts.max_iter)?;
    Ok(SigmaEstimate {
        sigma_min: sigma_min.min(sigma_max),
        sigma_max,
        iterations_used: it_max + it_min,
        converged: conv_max && conv_min,
    })
}

/// Largest singular value only, by power iteration on `AᵀA`. Cheap at any
/// size; used where only the operator norm is needed.
pub fn sigma_max(a: &CsrMatrix, tol: f64, max_iter: usize) -> Result<f64, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    let (sigma, _, _) = power_sigma_max(a, tol, max_iter);
    Ok(sigma)
}

fn power_sigma_max(a: &CsrMatrix, tol: f64, max_iter: usize) -> (f64, usize, bool) {
    let n = a.n_cols();
    let mut z = deterministic_unit(n);
    let mut prev = f64::NAN;
    let mut hits = 0usize;
    let mut sigma = 0.0;
    for it in 1..=max_iter {
        let w = a.matvec(&z).expect("dimension checked");
        sigma = w.norm2();
        if sigma == 0.0 {
            // random vector annihilated: the matrix is (numerically) zero
            return (0.0, it, true);
        }
        let mut z_next = a.matvec_transpose(&w).expect("dimension checked");
        let norm = z_next.norm2();
        if norm == 0.0 {
            return (sigma, it, true);
        }
        z_next.scale_in_place(1.0 / norm);
        z = z_next;
        if prev.is_finite() && (sigma - prev).abs() <= tol * sigma.max(f64::MIN_POSITIVE) {
            hits += 1;
            if hits >= 2 {
                return (sigma, it, true);
            }
        } else {
            hits = 0;
        }
        prev = sigma;
    }
    (sigma, max_iter, false)
}

fn inverse_sigma_min(
    a: &CsrMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, usize, bool), LinalgError> {
    let n = a.n_rows();
    let lu = lu_factor(&a.to_dense())?;
    let mut z = deterministic_unit(n).into_vec();
    let mut prev = f64::NAN;
    let mut hits = 0usize;
    let mut sigma = 0.0;
    for it in 1..=max_iter {
        // (AᵀA)⁻¹ z = A⁻¹ A⁻ᵀ z
        let w = lu.solve_transpose(&z);
        let mut next = lu.solve(&w);
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(LinalgError::SingularMatrix);
        }
        for v in &mut next {
            *v /= norm;
        }
        z = next;
        let zv = DenseVector::new(z.clone()).map_err(|_| LinalgError::SingularMatrix)?;
        sigma = a.matvec(&zv).expect("dimension checked").norm2();
        if prev.is_finite() && (sigma - prev).abs() <= tol * sigma.max(f64::MIN_POSITIVE) {
            hits += 1;
            if hits >= 2 {
                return Ok((sigma, it, true));
            }
        } else {
            hits = 0;
        }
        prev = sigma;
    }
    Ok((sigma, max_iter, false))
}

/// Deterministic pseudo-random unit vector (splitmix64 stream keyed on the
/// dimension). A fixed start keeps every estimate reproducible run to run.
fn deterministic_unit(n: usize) -> DenseVector {
    let mut state = 0x243F_6A88_85A3_08D3u64 ^ (n as u64);
    let mut entries: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            let unit = (z >> 11) as f64 / (1u64 << 53) as f64;
            2.0 * unit - 1.0
        })
        .collect();
    let norm = entries.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        entries[0] = 1.0;
    } else {
        for v in &mut entries {
            *v /= norm;
        }
    }
    DenseVector::new(entries).expect("finite by construction")
}
