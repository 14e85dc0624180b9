//! The inexact Newton iteration with feasible inexact projections.
//!
//! One outer iteration, starting from a feasible `x_k`:
//!
//! 1. stop if `‖f(x_k)‖` is below the residual tolerance;
//! 2. pick the problem's Clarke-Jacobian element `V_k` and compute a step
//!    `s` with `‖f(x_k) + V_k s‖ ≤ η_k ‖f(x_k)‖` by LSQR (zero start, true
//!    residual checked every inner iteration); set `y_k = x_k + s`;
//! 3. if `y_k` is already feasible, accept it; otherwise pull it back with a
//!    feasible inexact projection at tolerance `θ_k`, anchored at `x_k`;
//! 4. record certificates and repeat.
//!
//! The tolerances `(η_k, θ_k)` come from a [`ForcingSchedule`]; their decay
//! dictates the local rate (constant → Q-linear, vanishing → Q-superlinear,
//! residual-powered with exponent `μ` → order `1 + μ`), which
//! [`estimate_order`] measures empirically from the trace.
//!
//! Inner failures degrade deliberately: an uncertified linear solve is
//! retried once with a doubled iteration cap and then aborts the run with
//! [`SolveStatus::InnerFailure`]; an uncertified projection keeps its best
//! feasible iterate and records `projection_certified = false` — the point
//! is still feasible, honesty lives in the trace.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{CsrMatrix, DenseVector};
use crate::linsolve::{self, LinsolveError, EXACT_REL_TOL};
use crate::projection::{self, ProjectionError};
use crate::sets::{FeasibleSet, SetError, MEMBERSHIP_TOL};

/// A constrained equation `x ∈ C, f(x) = 0`.
///
/// `clarke_element` supplies *one* element of the Clarke generalized
/// Jacobian at `x` (for continuously differentiable `f` this is just the
/// Jacobian). The selection rule is the implementor's: the solver never
/// enumerates the whole set.
pub trait ConstrainedProblem {
    fn dimension(&self) -> usize;

    /// Evaluates `f(x)`. Must be finite on a neighborhood of the set.
    fn eval_f(&self, x: &DenseVector) -> DenseVector;

    /// One element `V ∈ ∂f(x)`, as a square sparse matrix.
    fn clarke_element(&self, x: &DenseVector) -> CsrMatrix;

    fn feasible_set(&self) -> &dyn FeasibleSet;

    /// The root, when planted or otherwise known; enables error tracking.
    fn known_solution(&self) -> Option<&DenseVector> {
        None
    }
}

/// Decay law for the forcing tolerances `(η_k, θ_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingSchedule {
    /// `η_k ≡ η`, `θ_k ≡ θ`: Q-linear regime.
    Constant { eta: f64, theta: f64 },
    /// `η_k = η₀/(k+1)`, `θ_k = θ₀/(k+1)²`: Q-superlinear regime.
    Vanishing { eta0: f64, theta0: f64 },
    /// `η_k = min(η₀‖f‖^μ, η₀)`, `θ_k = min(θ₀‖f‖^{2μ}, θ₀)`:
    /// order `1 + μ` regime, `μ ∈ (0, 1]`.
    ResidualPower { mu: f64, eta0: f64, theta0: f64 },
}

impl ForcingSchedule {
    /// `(η_k, θ_k)` for iteration `k` at residual norm `‖f(x_k)‖`.
    pub fn tolerances(&self, k: usize, residual_norm: f64) -> (f64, f64) {
        match *self {
            ForcingSchedule::Constant { eta, theta } => (eta, theta),
            ForcingSchedule::Vanishing { eta0, theta0 } => {
                let k1 = (k + 1) as f64;
                (eta0 / k1, theta0 / (k1 * k1))
            }
            ForcingSchedule::ResidualPower { mu, eta0, theta0 } => (
                (eta0 * residual_norm.powf(mu)).min(eta0),
                (theta0 * residual_norm.powf(2.0 * mu)).min(theta0),
            ),
        }
    }

    /// Upper envelope of the `η_k` values this schedule can emit.
    pub fn eta_cap(&self) -> f64 {
        match *self {
            ForcingSchedule::Constant { eta, .. } => eta,
            ForcingSchedule::Vanishing { eta0, .. } => eta0,
            ForcingSchedule::ResidualPower { eta0, .. } => eta0,
        }
    }

    /// Upper envelope of the `θ_k` values this schedule can emit.
    pub fn theta_cap(&self) -> f64 {
        match *self {
            ForcingSchedule::Constant { theta, .. } => theta,
            ForcingSchedule::Vanishing { theta0, .. } => theta0,
            ForcingSchedule::ResidualPower { theta0, .. } => theta0,
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        let (eta, theta) = (self.eta_cap(), self.theta_cap());
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(SolveError::InvalidConfig(
                "eta must be finite and nonnegative".into(),
            ));
        }
        if !(0.0..0.5).contains(&theta) {
            return Err(SolveError::InvalidConfig(
                "theta must lie in [0, 1/2)".into(),
            ));
        }
        if let ForcingSchedule::ResidualPower { mu, .. } = *self {
            if !(mu > 0.0 && mu <= 1.0) {
                return Err(SolveError::InvalidConfig("mu must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// The admissible-tolerance bound `(1 − √(2θ)) / (λ Γ (1 + √(2θ)))`, scaled
/// by 0.9999 to stay strictly inside it. This is how the benchmark configs
/// derive `η` from `θ` and the operator norm.
pub fn derived_eta(theta: f64, gamma: f64, lambda: f64) -> f64 {
    let root = (2.0 * theta).sqrt();
    0.9999 * (1.0 - root) / (lambda * gamma * (1.0 + root))
}

/// How step 3 obtains feasible points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    /// Conditional-gradient inexact projection at tolerance `θ_k`.
    CondG,
    /// Exact projection wrapped in a zero-tolerance certificate.
    Exact,
}

/// All knobs of the outer iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub schedule: ForcingSchedule,
    /// Stop when `‖f(x_k)‖` falls below this.
    pub residual_tol: f64,
    pub max_outer: usize,
    /// Inner LSQR cap; `None` means `2n`.
    pub max_inner_linear: Option<usize>,
    /// Inner conditional-gradient cap.
    pub max_inner_proj: usize,
    /// Local Lipschitz bound `Γ` near the solution, when known.
    pub gamma_hint: Option<f64>,
    /// Bound `λ ≥ ‖V⁻¹‖` over the Clarke elements at the solution, when
    /// known (0.5 for the absolute-value family).
    pub lambda_hint: Option<f64>,
    pub projection_mode: ProjectionMode,
}

impl SolverConfig {
    /// Defaults: tolerance `1e-6`, 50 outer iterations, LSQR cap `2n`,
    /// 100 projection iterations, conditional-gradient projections.
    pub fn with_schedule(schedule: ForcingSchedule) -> Self {
        Self {
            schedule,
            residual_tol: 1e-6,
            max_outer: 50,
            max_inner_linear: None,
            max_inner_proj: 100,
            gamma_hint: None,
            lambda_hint: None,
            projection_mode: ProjectionMode::CondG,
        }
    }

    /// Checks structural validity plus, when both hints are present, the
    /// admissibility condition `η < (1 − √(2θ)) / (λΓ(1 + √(2θ)))`. With
    /// hints missing the admissibility check is skipped with a warning.
    pub fn validate(&self) -> Result<(), SolveError> {
        self.schedule.validate()?;
        if !(self.residual_tol > 0.0) {
            return Err(SolveError::InvalidConfig(
                "residual_tol must be positive".into(),
            ));
        }
        if self.max_outer == 0 || self.max_inner_proj == 0 {
            return Err(SolveError::InvalidConfig(
                "iteration caps must be at least 1".into(),
            ));
        }
        if let Some(0) = self.max_inner_linear {
            return Err(SolveError::InvalidConfig(
                "max_inner_linear must be at least 1".into(),
            ));
        }
        match (self.gamma_hint, self.lambda_hint) {
            (Some(gamma), Some(lambda)) => {
                if !(gamma > 0.0 && lambda > 0.0) {
                    return Err(SolveError::InvalidConfig(
                        "gamma and lambda hints must be positive".into(),
                    ));
                }
                let theta = self.schedule.theta_cap();
                let root = (2.0 * theta).sqrt();
                let bound = (1.0 - root) / (lambda * gamma * (1.0 + root));
                if self.schedule.eta_cap() >= bound {
                    return Err(SolveError::InvalidConfig(format!(
                        "eta cap {:e} violates the admissible bound {:e} for theta {:e}",
                        self.schedule.eta_cap(),
                        bound,
                        theta
                    )));
                }
            }
            _ => {
                log::warn!(
                    "gamma/lambda hints not set: skipping the admissible-tolerance check"
                );
            }
        }
        Ok(())
    }
}

/// Per-iteration record: residuals, tolerances, inner effort, certificates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖f(x_k)‖` at the start of the iteration.
    pub residual_norm: f64,
    pub eta_k: f64,
    pub theta_k: f64,
    pub inner_linear_iters: usize,
    pub inner_proj_iters: usize,
    /// `‖f(x_k) + V_k (y_k − x_k)‖ ≤ η_k ‖f(x_k)‖`, recomputed from scratch.
    pub linear_certificate_ok: bool,
    pub projection_certified: bool,
    /// `‖x_{k+1} − x_k‖`.
    pub step_norm: f64,
    /// `‖x_k − x̄‖` when the solution is known.
    pub error_to_solution: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    InnerFailure,
}

/// Full account of a solve. Serializes to JSON with one record per
/// iteration and all certificate fields included.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
    pub final_point: DenseVector,
    /// Wall-clock seconds for the whole solve.
    pub wall_time: f64,
    /// `‖x_final − x̄‖` when the solution is known; extends the per-record
    /// error sequence by its last element for the rate estimators.
    pub final_error_to_solution: Option<f64>,
    /// `‖x̄‖`, recorded so error floors can be scaled without the problem.
    pub known_solution_norm: Option<f64>,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// The known-solution error sequence `e_0, …, e_K` (records plus the
    /// final point), when available.
    pub fn error_sequence(&self) -> Option<Vec<f64>> {
        let mut errors: Vec<f64> = self
            .records
            .iter()
            .map(|r| r.error_to_solution)
            .collect::<Option<Vec<_>>>()?;
        errors.push(self.final_error_to_solution?);
        Some(errors)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("starting point is not feasible")]
    InfeasibleStart,
    #[error("starting point has length {found}, problem dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("f(x) is not finite at iteration {iteration}")]
    NonFiniteResidual { iteration: usize },
    #[error(
        "divergence guard: residual {residual:e} at iteration {iteration} exceeds 1e6 x initial {initial:e}"
    )]
    Diverged {
        iteration: usize,
        residual: f64,
        initial: f64,
    },
    #[error("linear solver rejected the system: {0}")]
    Linear(#[from] LinsolveError),
    #[error("projection failed: {0}")]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Divergence guard threshold relative to the initial residual.
const DIVERGENCE_FACTOR: f64 = 1e6;

/// Runs the iteration from the feasible start `x0`.
///
/// Returns a trace whose status reports convergence, iteration exhaustion,
/// or inner failure; hard errors (infeasible start, non-finite values,
/// divergence) abort with a diagnostic instead.
pub fn solve<P: ConstrainedProblem + ?Sized>(
    problem: &P,
    x0: &DenseVector,
    config: &SolverConfig,
) -> Result<SolveTrace, SolveError> {
    config.validate()?;
    let n = problem.dimension();
    if x0.len() != n {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    let set = problem.feasible_set();
    if !set.contains(x0, MEMBERSHIP_TOL)? {
        return Err(SolveError::InfeasibleStart);
    }
    let lsqr_cap = config.max_inner_linear.unwrap_or(2 * n).max(1);
    let started = std::time::Instant::now();

    let error_at = |x: &DenseVector| problem.known_solution().map(|xs| x.distance(xs));

    let mut x = x0.clone();
    let mut f = problem.eval_f(&x);
    if !f.is_finite() {
        return Err(SolveError::NonFiniteResidual { iteration: 0 });
    }
    let initial_residual = f.norm2();

    let mut records = Vec::new();
    let status;
    let mut k = 0usize;
    loop {
        let residual_norm = f.norm2();
        if residual_norm < config.residual_tol {
            status = SolveStatus::Converged;
            break;
        }
        if k >= config.max_outer {
            status = SolveStatus::MaxIterations;
            break;
        }
        if residual_norm > DIVERGENCE_FACTOR * initial_residual {
            return Err(SolveError::Diverged {
                iteration: k,
                residual: residual_norm,
                initial: initial_residual,
            });
        }

        let (eta_k, theta_k) = config.schedule.tolerances(k, residual_norm);
        let v_k = problem.clarke_element(&x);
        let rhs = f.negated();

        // Step computation, with one doubled-cap retry on certification
        // failure. Breakdown means the Krylov space is exhausted; retrying
        // cannot help.
        let mut linear_failed = false;
        let mut inner_linear_iters = 0;
        let mut step = None;
        for cap in [lsqr_cap, 2 * lsqr_cap] {
            match linsolve::lsqr_solve(&v_k, &rhs, eta_k, cap) {
                Ok(result) => {
                    inner_linear_iters = result.iterations;
                    let satisfied = result.satisfied;
                    step = Some(result.solution);
                    if satisfied {
                        linear_failed = false;
                        break;
                    }
                    linear_failed = true;
                }
                Err(LinsolveError::Breakdown { iterations, .. }) => {
                    inner_linear_iters = iterations;
                    linear_failed = true;
                    break;
                }
                Err(other) => return Err(SolveError::Linear(other)),
            }
        }
        if linear_failed {
            records.push(IterationRecord {
                k,
                residual_norm,
                eta_k,
                theta_k,
                inner_linear_iters,
                inner_proj_iters: 0,
                linear_certificate_ok: false,
                projection_certified: false,
                step_norm: 0.0,
                error_to_solution: error_at(&x),
            });
            status = SolveStatus::InnerFailure;
            break;
        }
        let step = step.expect("linear solve succeeded");
        let y = x.add(&step);

        // Certificate recomputed from scratch, independent of LSQR's own
        // bookkeeping.
        let eta_effective = if eta_k == 0.0 { EXACT_REL_TOL } else { eta_k };
        let linear_residual = f.add(&v_k.matvec(&step).expect("square system")).norm2();
        let linear_certificate_ok = linear_residual <= eta_effective * residual_norm + 1e-13;

        // Step 3: keep feasible y as is, otherwise project.
        let (x_next, inner_proj_iters, projection_certified) =
            if set.contains(&y, MEMBERSHIP_TOL)? {
                (y, 0, true)
            } else {
                match config.projection_mode {
                    ProjectionMode::CondG => {
                        let (w, cert) =
                            projection::condg_project(set, &y, &x, theta_k, config.max_inner_proj)?;
                        (w, cert.inner_iterations, cert.certified)
                    }
                    ProjectionMode::Exact => {
                        let (w, cert) = projection::exact_as_inexact(set, &y, &x)?;
                        (w, cert.inner_iterations, cert.certified)
                    }
                }
            };

        records.push(IterationRecord {
            k,
            residual_norm,
            eta_k,
            theta_k,
            inner_linear_iters,
            inner_proj_iters,
            linear_certificate_ok,
            projection_certified,
            step_norm: x_next.distance(&x),
            error_to_solution: error_at(&x),
        });

        x = x_next;
        f = problem.eval_f(&x);
        if !f.is_finite() {
            return Err(SolveError::NonFiniteResidual { iteration: k + 1 });
        }
        k += 1;
    }

    Ok(SolveTrace {
        records,
        status,
        final_error_to_solution: error_at(&x),
        known_solution_norm: problem.known_solution().map(|xs| xs.norm2()),
        final_point: x,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Confidence tag for [`estimate_order`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderConfidence {
    Ok,
    InsufficientData,
}

/// Relative error floor: entries below `1e-14 · scale` sit in the
/// floating-point floor and are excluded from rate estimation.
fn usable_errors(trace: &SolveTrace) -> Option<Vec<f64>> {
    let errors = trace.error_sequence()?;
    let scale = trace.known_solution_norm.unwrap_or(1.0).max(1.0);
    let floor = 1e-14 * scale;
    Some(errors.into_iter().take_while(|&e| e > floor).collect())
}

/// Consecutive error ratios `e_{k+1}/e_k` over the usable window; the raw
/// material of the superlinearity check.
pub fn usable_error_ratios(trace: &SolveTrace) -> Option<Vec<f64>> {
    let errors = usable_errors(trace)?;
    if errors.len() < 2 {
        return None;
    }
    Some(errors.windows(2).map(|w| w[1] / w[0]).collect())
}

/// Least-squares slope of `log e_{k+1}` against `log e_k` over the usable
/// window: the empirical order of convergence.
///
/// Requires at least 4 usable errors (3 consecutive pairs); otherwise the
/// confidence comes back [`OrderConfidence::InsufficientData`] and the
/// order value is NaN.
pub fn estimate_order(trace: &SolveTrace) -> (f64, OrderConfidence) {
    let Some(errors) = usable_errors(trace) else {
        return (f64::NAN, OrderConfidence::InsufficientData);
    };
    let pairs: Vec<(f64, f64)> = errors
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[0].ln(), w[1].ln()))
        .collect();
    if pairs.len() < 3 {
        return (f64::NAN, OrderConfidence::InsufficientData);
    }
    let m = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for (px, py) in &pairs {
        num += (px - mean_x) * (py - mean_y);
        den += (px - mean_x) * (px - mean_x);
    }
    if den == 0.0 {
        return (f64::NAN, OrderConfidence::InsufficientData);
    }
    (num / den, OrderConfidence::Ok)
}

/// True iff the known-solution error strictly decreases at every iteration
/// whose error is above `100 · ε · scale` — the Q-linear contraction
/// signature, with the floating-point floor masked out.
pub fn check_contraction(trace: &SolveTrace) -> bool {
    let Some(errors) = trace.error_sequence() else {
        return false;
    };
    let scale = trace.known_solution_norm.unwrap_or(1.0).max(1.0);
    let floor = 100.0 * f64::EPSILON * scale;
    errors
        .windows(2)
        .all(|w| w[0] <= floor || w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::BoxSet;

    /// Componentwise smooth problem `f_i(x) = c_i (x_i² − 1)` over a box so
    /// wide it never binds; the root is the all-ones vector.
    struct Quadratic {
        coeffs: Vec<f64>,
        set: BoxSet,
        root: DenseVector,
    }

    impl Quadratic {
        fn new(coeffs: Vec<f64>) -> Self {
            let n = coeffs.len();
            Self {
                set: BoxSet::centered(n, 1e6).unwrap(),
                root: DenseVector::constant(n, 1.0),
                coeffs,
            }
        }
    }

    impl ConstrainedProblem for Quadratic {
        fn dimension(&self) -> usize {
            self.coeffs.len()
        }
        fn eval_f(&self, x: &DenseVector) -> DenseVector {
            DenseVector::from_fn(self.dimension(), |i| self.coeffs[i] * (x[i] * x[i] - 1.0))
        }
        fn clarke_element(&self, x: &DenseVector) -> CsrMatrix {
            let diag: Vec<f64> = (0..self.dimension())
                .map(|i| 2.0 * self.coeffs[i] * x[i])
                .collect();
            CsrMatrix::from_diagonal(&diag)
        }
        fn feasible_set(&self) -> &dyn FeasibleSet {
            &self.set
        }
        fn known_solution(&self) -> Option<&DenseVector> {
            Some(&self.root)
        }
    }

    fn exact_config() -> SolverConfig {
        let mut config = SolverConfig::with_schedule(ForcingSchedule::Constant {
            eta: 0.0,
            theta: 0.0,
        });
        config.residual_tol = 1e-12;
        config.projection_mode = ProjectionMode::Exact;
        config
    }

    #[test]
    fn scalar_newton_equivalence() {
        // x ← (x² + 1) / (2x) from 0.5: 0.5, 1.25, 1.025, 1.000304878…
        let problem = Quadratic::new(vec![1.0]);
        let x0 = DenseVector::new(vec![0.5]).unwrap();
        let trace = solve(&problem, &x0, &exact_config()).unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        let mut expected = Vec::new();
        let mut x = 0.5f64;
        for _ in 0..trace.records.len() {
            expected.push((x - 1.0).abs());
            x = (x * x + 1.0) / (2.0 * x);
        }
        for (record, want) in trace.records.iter().zip(expected) {
            let got = record.error_to_solution.unwrap();
            assert!(
                (got - want).abs() <= 1e-10,
                "iterate {}: error {got} vs classical {want}",
                record.k
            );
        }
    }

    #[test]
    fn immediate_convergence_when_already_solved() {
        let problem = Quadratic::new(vec![1.0, 2.0]);
        let x0 = DenseVector::constant(2, 1.0);
        let trace = solve(&problem, &x0, &exact_config()).unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        assert!(trace.records.is_empty());
        assert_eq!(trace.final_point.as_slice(), x0.as_slice());
    }

    #[test]
    fn quadratic_tail_on_smooth_problem() {
        let problem = Quadratic::new(vec![1.0, 3.0, 0.5]);
        let x0 = DenseVector::constant(3, 0.5);
        let trace = solve(&problem, &x0, &exact_config()).unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        let (order, confidence) = estimate_order(&trace);
        assert_eq!(confidence, OrderConfidence::Ok);
        assert!(order > 1.6, "expected quadratic tail, measured {order}");
        assert!(check_contraction(&trace));
    }

    #[test]
    fn infeasible_start_rejected() {
        let problem = Quadratic::new(vec![1.0]);
        let x0 = DenseVector::new(vec![2e6]).unwrap();
        assert!(matches!(
            solve(&problem, &x0, &exact_config()),
            Err(SolveError::InfeasibleStart)
        ));
    }

    #[test]
    fn admissibility_validation() {
        let mut config = SolverConfig::with_schedule(ForcingSchedule::Constant {
            eta: 0.5,
            theta: 0.1,
        });
        config.gamma_hint = Some(10.0);
        config.lambda_hint = Some(0.5);
        // bound = (1 − √0.2) / (0.5·10·(1 + √0.2)) ≈ 0.0764 < 0.5
        assert!(matches!(
            config.validate(),
            Err(SolveError::InvalidConfig(_))
        ));
        config.schedule = ForcingSchedule::Constant {
            eta: derived_eta(0.1, 10.0, 0.5),
            theta: 0.1,
        };
        assert!(config.validate().is_ok());
    }

    #[test]
    fn schedule_bounds_enforced() {
        let bad_theta = SolverConfig::with_schedule(ForcingSchedule::Constant {
            eta: 0.1,
            theta: 0.5,
        });
        assert!(bad_theta.validate().is_err());
        let bad_mu = SolverConfig::with_schedule(ForcingSchedule::ResidualPower {
            mu: 2.0,
            eta0: 0.1,
            theta0: 0.1,
        });
        assert!(bad_mu.validate().is_err());
        let ok = SolverConfig::with_schedule(ForcingSchedule::Vanishing {
            eta0: 0.3,
            theta0: 0.2,
        });
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn divergence_guard_fires() {
        /// Deliberately wrong Jacobian sign: the "Newton" step doubles the
        /// iterate instead of closing in.
        struct Doubling {
            set: BoxSet,
        }
        impl ConstrainedProblem for Doubling {
            fn dimension(&self) -> usize {
                1
            }
            fn eval_f(&self, x: &DenseVector) -> DenseVector {
                DenseVector::new(vec![x[0]]).unwrap()
            }
            fn clarke_element(&self, _x: &DenseVector) -> CsrMatrix {
                CsrMatrix::from_diagonal(&[-1.0])
            }
            fn feasible_set(&self) -> &dyn FeasibleSet {
                &self.set
            }
        }
        let problem = Doubling {
            set: BoxSet::centered(1, f64::MAX / 4.0).unwrap(),
        };
        let mut config = SolverConfig::with_schedule(ForcingSchedule::Constant {
            eta: 0.0,
            theta: 0.0,
        });
        config.max_outer = 200;
        config.projection_mode = ProjectionMode::Exact;
        let x0 = DenseVector::new(vec![1.0]).unwrap();
        assert!(matches!(
            solve(&problem, &x0, &config),
            Err(SolveError::Diverged { .. })
        ));
    }

    #[test]
    fn estimate_order_hand_sequences() {
        fn trace_from_errors(errors: &[f64]) -> SolveTrace {
            let records = errors[..errors.len() - 1]
                .iter()
                .enumerate()
                .map(|(k, &e)| IterationRecord {
                    k,
                    residual_norm: e,
                    eta_k: 0.0,
                    theta_k: 0.0,
                    inner_linear_iters: 1,
                    inner_proj_iters: 0,
                    linear_certificate_ok: true,
                    projection_certified: true,
                    step_norm: e,
                    error_to_solution: Some(e),
                })
                .collect();
            SolveTrace {
                records,
                status: SolveStatus::Converged,
                final_point: DenseVector::zeros(1),
                wall_time: 0.0,
                final_error_to_solution: Some(*errors.last().unwrap()),
                known_solution_norm: Some(1.0),
            }
        }

        let (order, conf) = estimate_order(&trace_from_errors(&[1e-1, 1e-2, 1e-4, 1e-8]));
        assert_eq!(conf, OrderConfidence::Ok);
        assert!((order - 2.0).abs() < 1e-9);

        let (order, conf) = estimate_order(&trace_from_errors(&[1e-1, 1e-2, 1e-3, 1e-4]));
        assert_eq!(conf, OrderConfidence::Ok);
        assert!((order - 1.0).abs() < 1e-9);

        let (_, conf) = estimate_order(&trace_from_errors(&[1e-1, 1e-2, 1e-3]));
        assert_eq!(conf, OrderConfidence::InsufficientData);

        assert!(check_contraction(&trace_from_errors(&[1e-1, 1e-2, 1e-3, 1e-4])));
        assert!(!check_contraction(&trace_from_errors(&[1e-1, 1e-2, 5e-2, 1e-3])));
    }

    #[test]
    fn trace_serializes_to_json_and_back() {
        let problem = Quadratic::new(vec![1.0, 2.0]);
        let x0 = DenseVector::constant(2, 0.5);
        let trace = solve(&problem, &x0, &exact_config()).unwrap();
        let json = trace.to_json();
        assert!(json.contains("linear_certificate_ok"));
        assert!(json.contains("projection_certified"));
        let back = SolveTrace::from_json(&json).unwrap();
        assert_eq!(back.records.len(), trace.records.len());
        assert_eq!(back.status, trace.status);
        assert_eq!(back.final_point, trace.final_point);
    }
}
