//! Feasible inexact projections with machine-verifiable certificates.
//!
//! A point `w ∈ C` is an inexact projection of `y` relative to an anchor
//! `x ∈ C` with tolerance `θ ≥ 0` when
//!
//! ```text
//! ⟨y − w, z − w⟩ ≤ θ ‖y − x‖²   for all z ∈ C.
//! ```
//!
//! With `θ = 0` this is the variational inequality of the exact projection;
//! any `θ > 0` relaxes it while keeping `w` feasible. The left-hand side is
//! affine in `z`, so its maximum over `C` is attained at a vertex — for
//! polyhedral sets the condition is checkable *exactly* by a vertex sweep,
//! and for any set it equals `⟨y − w, v − w⟩` with `v = lmo(w − y)`.
//!
//! [`condg_project`] produces such a point by conditional-gradient descent
//! on `½‖u − y‖²`: each iterate is a convex combination of feasible points,
//! so the output is feasible by construction, and the stopping test *is* the
//! certificate. [`exact_as_inexact`] wraps an exact projection in the same
//! certificate shape for sets where projecting is cheap.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::DenseVector;
use crate::sets::{FeasibleSet, SetError, MEMBERSHIP_TOL};

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("anchor point is not feasible")]
    InfeasibleAnchor,
    #[error("theta must be nonnegative")]
    NegativeTheta,
    #[error("max_iter must be at least 1")]
    ZeroIterationBudget,
    #[error("internal inconsistency: zero direction with positive gap {gap:e}")]
    DegenerateStep { gap: f64 },
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Certificate attached to every inexact projection.
///
/// `certified = true` means the gap test `final_gap ≤ theta_used ·
/// anchor_distance²` passed at termination and the point is feasible. When
/// the iteration cap is hit first, the best iterate is returned with
/// `certified = false` — still feasible, just not certifiably within `θ`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProjectionCertificate {
    pub theta_used: f64,
    /// `‖y − x‖` at entry.
    pub anchor_distance: f64,
    /// `max_z ⟨y − w, z − w⟩` as measured at termination.
    pub final_gap: f64,
    pub inner_iterations: usize,
    pub certified: bool,
}

/// Numerical slack for zero-gap checks: the variational inequality of an
/// exact projection holds at `≤ 0` in exact arithmetic; dot-product rounding
/// is absorbed by this scale-aware allowance.
pub fn vi_slack(y: &DenseVector) -> f64 {
    1e-10 * (1.0 + y.norm2().powi(2))
}

/// Conditional-gradient (Frank–Wolfe) feasible inexact projection of `y`
/// onto `set`, anchored at the feasible point `x`.
///
/// At each step the linear minimization oracle yields
/// `v_t = argmin_z ⟨w_t − y, z⟩`, hence the exact gap
/// `g_t = ⟨y − w_t, v_t − w_t⟩ = max_z ⟨y − w_t, z − w_t⟩`; the loop stops as
/// soon as `g_t ≤ θ‖y − x‖²`. Steps use the closed-form line search on the
/// projection quadratic, `γ_t = min(1, g_t / ‖v_t − w_t‖²)`, which keeps the
/// objective monotone, so on cap exhaustion the final iterate is the best
/// one seen.
///
/// The loop starts from whichever of the anchor `x` and the set's
/// [`FeasibleSet::feasible_repair`] of `y` is closer to `y`. The anchor only
/// enters the *bound*; the start is free, and starting thousands of units
/// from the projection makes the vertex-hopping loop useless at scale —
/// conditional gradient closes distance like `diam(C)/√t`, so it must begin
/// near where it should end. When `y = x` the anchor is exactly optimal and
/// the call returns immediately with a zero gap.
pub fn condg_project(
    set: &dyn FeasibleSet,
    y: &DenseVector,
    x: &DenseVector,
    theta: f64,
    max_iter: usize,
) -> Result<(DenseVector, ProjectionCertificate), ProjectionError> {
    if theta < 0.0 || theta.is_nan() {
        return Err(ProjectionError::NegativeTheta);
    }
    if max_iter == 0 {
        return Err(ProjectionError::ZeroIterationBudget);
    }
    if !set.contains(x, MEMBERSHIP_TOL)? {
        return Err(ProjectionError::InfeasibleAnchor);
    }
    let anchor_distance = y.distance(x);
    let bound = theta * anchor_distance * anchor_distance;

    let mut w = match set.feasible_repair(y) {
        Some(repair) if repair.distance(y) < anchor_distance => repair,
        _ => x.clone(),
    };
    let mut iterations = 0usize;
    loop {
        let direction_cost = w.sub(y);
        let v = set.lmo(&direction_cost)?;
        let gap = y.sub(&w).dot(&v.sub(&w));
        if gap <= bound {
            return Ok((
                w,
                ProjectionCertificate {
                    theta_used: theta,
                    anchor_distance,
                    final_gap: gap,
                    inner_iterations: iterations,
                    certified: true,
                },
            ));
        }
        if iterations >= max_iter {
            return Ok((
                w,
                ProjectionCertificate {
                    theta_used: theta,
                    anchor_distance,
                    final_gap: gap,
                    inner_iterations: iterations,
                    certified: false,
                },
            ));
        }
        let step = v.sub(&w);
        let step_sq = step.dot(&step);
        if step_sq == 0.0 {
            // v = w with gap > bound ≥ 0 contradicts LMO optimality.
            return Err(ProjectionError::DegenerateStep { gap });
        }
        let gamma = (gap / step_sq).min(1.0);
        w = set.snap_inward(w.add_scaled(gamma, &step));
        iterations += 1;
    }
}

/// Wraps the exact projection as a `θ = 0` inexact projection, measuring
/// and verifying the zero-gap certificate through the LMO.
pub fn exact_as_inexact(
    set: &dyn FeasibleSet,
    y: &DenseVector,
    x: &DenseVector,
) -> Result<(DenseVector, ProjectionCertificate), ProjectionError> {
    if !set.has_exact_projection() {
        return Err(ProjectionError::Set(SetError::NoExactProjection));
    }
    if !set.contains(x, MEMBERSHIP_TOL)? {
        return Err(ProjectionError::InfeasibleAnchor);
    }
    let w = set.exact_project(y)?;
    let v = set.lmo(&w.sub(y))?;
    let gap = y.sub(&w).dot(&v.sub(&w));
    Ok((
        w,
        ProjectionCertificate {
            theta_used: 0.0,
            anchor_distance: y.distance(x),
            final_gap: gap,
            inner_iterations: 0,
            certified: gap <= vi_slack(y),
        },
    ))
}

/// Outcome of [`verify_certificate`]. `exhaustive = true` means the
/// inequality was checked at every vertex (exact for polyhedral sets);
/// otherwise it was sampled at random feasible points and is probabilistic.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub satisfied: bool,
    /// Largest measured `⟨y − w, z − w⟩ − θ‖y − x‖²` over the checked `z`.
    pub worst_violation: f64,
    pub exhaustive: bool,
    pub points_checked: usize,
}

/// Number of sampled feasible points used for non-polyhedral sets.
pub const VERIFY_SAMPLES: usize = 1000;

/// Independently re-checks the inexact-projection inequality for `w`.
///
/// Polyhedral sets are swept vertex by vertex — the affine function of `z`
/// attains its maximum at a vertex, so this check is exact up to dot-product
/// rounding (absorbed by [`vi_slack`]). Non-polyhedral sets are sampled at
/// [`VERIFY_SAMPLES`] random feasible points from a fixed-seed stream, and
/// the report flags itself as non-exhaustive.
pub fn verify_certificate(
    set: &dyn FeasibleSet,
    y: &DenseVector,
    x: &DenseVector,
    w: &DenseVector,
    theta: f64,
) -> Result<VerifyReport, ProjectionError> {
    if theta < 0.0 || theta.is_nan() {
        return Err(ProjectionError::NegativeTheta);
    }
    let dist = y.distance(x);
    let bound = theta * dist * dist;
    let gap_at = |z: &DenseVector| y.sub(w).dot(&z.sub(w));

    let (points, exhaustive): (Vec<DenseVector>, bool) = if set.is_polyhedral() {
        (set.vertices()?, true)
    } else {
        (sample_feasible(set, VERIFY_SAMPLES)?, false)
    };
    let mut worst = 0.0f64;
    for z in &points {
        worst = worst.max(gap_at(z) - bound);
    }
    Ok(VerifyReport {
        satisfied: worst <= vi_slack(y),
        worst_violation: worst,
        exhaustive,
        points_checked: points.len(),
    })
}

/// Deterministic stream of feasible points for sampled verification:
/// exact projections of pseudo-random Gaussians around the set.
fn sample_feasible(
    set: &dyn FeasibleSet,
    count: usize,
) -> Result<Vec<DenseVector>, ProjectionError> {
    if !set.has_exact_projection() {
        return Err(ProjectionError::Set(SetError::NoExactProjection));
    }
    let n = set.dimension();
    let mut state = 0x5EED_CAFE_F00Du64 ^ (n as u64).rotate_left(17);
    let mut next = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        // Box–Muller pairs, scaled to wander around the set.
        let raw = DenseVector::from_fn(n, |_| {
            let (u1, u2) = (next().max(f64::MIN_POSITIVE), next());
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos() * 3.0
        });
        points.push(set.exact_project(&raw)?);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{Ball, BoxSet, BudgetSimplex};

    fn vec2(a: f64, b: f64) -> DenseVector {
        DenseVector::new(vec![a, b]).unwrap()
    }

    #[test]
    fn anchor_equal_to_target_terminates_immediately() {
        let s = BudgetSimplex::new(2, 2.0).unwrap();
        let x = vec2(0.5, 0.5);
        let (w, cert) = condg_project(&s, &x, &x, 0.3, 100).unwrap();
        assert_eq!(w.as_slice(), x.as_slice());
        assert!(cert.certified);
        assert_eq!(cert.inner_iterations, 0);
        assert_eq!(cert.final_gap, 0.0);
    }

    #[test]
    fn theta_zero_converges_to_exact_projection() {
        let s = BudgetSimplex::new(2, 2.0).unwrap();
        let y = vec2(2.0, 2.0);
        let x = vec2(0.5, 0.5);
        let (w, cert) = condg_project(&s, &y, &x, 0.0, 10_000).unwrap();
        // Exact projection oracle from the sets module: (1, 1).
        assert!(w.distance(&vec2(1.0, 1.0)) <= 1e-4, "w = {w:?}");
        assert!(cert.final_gap <= 1e-10, "gap = {:e}", cert.final_gap);
        assert!(s.contains(&w, MEMBERSHIP_TOL).unwrap());
    }

    #[test]
    fn theta_zero_tracks_exact_projection_on_random_instances() {
        // A generous cap closes the distance to the exact projection even
        // when the warm start is not already optimal.
        let mut state = 0xC0DEu64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 6.0 - 3.0
        };
        for trial in 0..60 {
            let n = 2 + trial % 9;
            let s = BudgetSimplex::new(n, 0.5 + next().abs()).unwrap();
            let y = DenseVector::from_fn(n, |_| next());
            let x = s
                .exact_project(&DenseVector::from_fn(n, |_| next().abs() * 0.2))
                .unwrap();
            let (w, _) = condg_project(&s, &y, &x, 0.0, 1_000_000).unwrap();
            let exact = s.exact_project(&y).unwrap();
            assert!(
                w.distance(&exact) <= 1e-4,
                "trial {trial}: ‖w − P(y)‖ = {:e}",
                w.distance(&exact)
            );
        }
    }

    #[test]
    fn loose_theta_certificate_checks_at_vertices() {
        let s = BudgetSimplex::new(2, 2.0).unwrap();
        let y = vec2(2.0, 2.0);
        let x = vec2(0.5, 0.5);
        let theta = 0.1;
        let (w, cert) = condg_project(&s, &y, &x, theta, 100).unwrap();
        assert!(cert.certified);
        // bound = 0.1 · ‖(1.5, 1.5)‖² = 0.45, checked post hoc at all 3 vertices
        let bound = theta * 4.5;
        for z in s.vertices().unwrap() {
            let gap = y.sub(&w).dot(&z.sub(&w));
            assert!(gap <= bound + 1e-12, "gap {gap} exceeds {bound}");
        }
        let report = verify_certificate(&s, &y, &x, &w, theta).unwrap();
        assert!(report.satisfied && report.exhaustive);
    }

    #[test]
    fn condg_iterates_stay_feasible() {
        let s = BudgetSimplex::new(3, 1.5).unwrap();
        let y = DenseVector::new(vec![4.0, -1.0, 2.0]).unwrap();
        let x = DenseVector::new(vec![0.2, 0.2, 0.2]).unwrap();
        let (w, _) = condg_project(&s, &y, &x, 0.01, 500).unwrap();
        assert!(s.contains(&w, MEMBERSHIP_TOL).unwrap());
    }

    #[test]
    fn infeasible_anchor_rejected() {
        let s = BudgetSimplex::new(2, 1.0).unwrap();
        let y = vec2(2.0, 2.0);
        let bad_anchor = vec2(5.0, 5.0);
        assert!(matches!(
            condg_project(&s, &y, &bad_anchor, 0.1, 10),
            Err(ProjectionError::InfeasibleAnchor)
        ));
    }

    #[test]
    fn exact_wrapper_cases() {
        let b = BoxSet::new(vec2(0.0, 0.0), vec2(1.0, 1.0)).unwrap();
        let (w, cert) = exact_as_inexact(&b, &vec2(2.0, -1.0), &vec2(0.0, 0.0)).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.0]);
        assert!(cert.certified);
        assert!(cert.final_gap <= 1e-10);
        assert_eq!(cert.theta_used, 0.0);

        // interior point projects to itself with zero gap
        let s = BudgetSimplex::new(2, 2.0).unwrap();
        let (w, cert) = exact_as_inexact(&s, &vec2(0.3, 0.3), &vec2(1.0, 0.0)).unwrap();
        assert_eq!(w.as_slice(), &[0.3, 0.3]);
        assert!(cert.certified && cert.final_gap.abs() <= 1e-12);

        let ball = Ball::new(DenseVector::zeros(2), 1.0).unwrap();
        let (w, cert) = exact_as_inexact(&ball, &vec2(0.0, 2.0), &DenseVector::zeros(2)).unwrap();
        assert!((w[1] - 1.0).abs() < 1e-12);
        assert!(cert.certified);
    }

    #[test]
    fn verifier_rejects_non_projections() {
        let s = BudgetSimplex::new(2, 2.0).unwrap();
        let y = vec2(2.0, 2.0);
        let x = vec2(0.5, 0.5);
        // exact projection passes with θ = 0
        let w = s.exact_project(&y).unwrap();
        assert!(verify_certificate(&s, &y, &x, &w, 0.0).unwrap().satisfied);
        // a feasible point far from the projection fails at θ = 0
        let not_projection = vec2(0.0, 0.0);
        let report = verify_certificate(&s, &y, &x, &not_projection, 0.0).unwrap();
        assert!(!report.satisfied);
        assert!(report.worst_violation > 0.0);
    }

    #[test]
    fn sampled_mode_flags_itself() {
        let ball = Ball::new(DenseVector::zeros(2), 1.0).unwrap();
        let y = vec2(0.0, 3.0);
        let x = DenseVector::zeros(2);
        let w = ball.exact_project(&y).unwrap();
        let report = verify_certificate(&ball, &y, &x, &w, 0.0).unwrap();
        assert!(report.satisfied);
        assert!(!report.exhaustive);
        assert_eq!(report.points_checked, VERIFY_SAMPLES);
    }

    #[test]
    fn theta_monotonicity_of_acceptance() {
        // Anything certified at θ is certified at θ' ≥ θ: the verifier
        // agrees because the bound only grows.
        let s = BudgetSimplex::new(3, 2.0).unwrap();
        let y = DenseVector::new(vec![3.0, 1.0, -0.5]).unwrap();
        let x = DenseVector::new(vec![0.1, 0.4, 0.2]).unwrap();
        let (w, cert) = condg_project(&s, &y, &x, 0.05, 1000).unwrap();
        assert!(cert.certified);
        for theta in [0.05, 0.1, 0.3, 0.49] {
            assert!(verify_certificate(&s, &y, &x, &w, theta).unwrap().satisfied);
        }
    }

    #[test]
    fn condg_certified_agrees_with_verifier_on_random_instances() {
        // Internal consistency sweep at desk scale.
        let mut state = 7u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        let mut certified = 0;
        for trial in 0..300 {
            let n = 2 + (trial % 9);
            let d = 0.5 + next().abs();
            let s = BudgetSimplex::new(n, d).unwrap();
            let y = DenseVector::from_fn(n, |_| next());
            let x = s
                .exact_project(&DenseVector::from_fn(n, |_| next().abs() * 0.2))
                .unwrap();
            let theta = 0.02 + next().abs() * 0.1;
            let (w, cert) = condg_project(&s, &y, &x, theta, 2000).unwrap();
            assert!(s.contains(&w, MEMBERSHIP_TOL).unwrap());
            if cert.certified {
                certified += 1;
                let report = verify_certificate(&s, &y, &x, &w, theta).unwrap();
                assert!(
                    report.satisfied,
                    "trial {trial}: certified output failed the vertex sweep \
                     (violation {:e})",
                    report.worst_violation
                );
            }
        }
        assert!(certified >= 250, "only {certified}/300 certified");
    }

    #[test]
    fn lemma_bound_on_certified_outputs() {
        // ‖w − P(ỹ)‖ ≤ ‖y − ỹ‖ + √(2θ)‖y − x‖ for certified w, random data.
        let mut state = 99u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 6.0 - 3.0
        };
        for trial in 0..300 {
            let n = [2, 5, 10][trial % 3];
            let s = BudgetSimplex::new(n, 1.0 + next().abs()).unwrap();
            let y = DenseVector::from_fn(n, |_| next());
            let y_tilde = DenseVector::from_fn(n, |_| next());
            let x = s
                .exact_project(&DenseVector::from_fn(n, |_| next().abs() * 0.3))
                .unwrap();
            let theta = 0.01 + next().abs() * 0.12;
            let (w, cert) = condg_project(&s, &y, &x, theta, 5000).unwrap();
            if !cert.certified {
                continue;
            }
            let exact = s.exact_project(&y_tilde).unwrap();
            let lhs = w.distance(&exact);
            let rhs = y.distance(&y_tilde) + (2.0 * theta).sqrt() * y.distance(&x) + 1e-10;
            assert!(lhs <= rhs, "trial {trial}: {lhs} > {rhs}");
        }
    }
}
