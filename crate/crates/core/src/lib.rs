//! Solver library for constrained smooth and nonsmooth equations
//!
//! `newton_inexp` solves problems of the form
//!
//! ```text
//! find x ∈ C  such that  f(x) = 0,
//! ```
//!
//! where `f` is locally Lipschitz (possibly nonsmooth) and `C` is a closed
//! convex set. The driver is an inexact Newton iteration in which both inner
//! subproblems are allowed to be approximate, each with a machine-checkable
//! certificate:
//!
//! * the Newton linear system `V_k s = -f(x_k)` (with `V_k` an element of the
//!   Clarke generalized Jacobian) is solved iteratively until the relative
//!   residual falls below a forcing tolerance `η_k`;
//! * the tentative step `y_k = x_k + s` is pulled back onto `C` by a feasible
//!   inexact projection: a point `w ∈ C` with
//!   `⟨y_k − w, z − w⟩ ≤ θ_k ‖y_k − x_k‖²` for all `z ∈ C`, produced either by
//!   a conditional-gradient loop ([`projection::condg_project`]) or by an
//!   exact projection when the set supports one.
//!
//! Every iterate is feasible by construction. The decay law of the forcing
//! sequences `{η_k}, {θ_k}` selects the local convergence rate: constant
//! tolerances give Q-linear convergence, vanishing tolerances give
//! Q-superlinear convergence, and residual-powered tolerances give convergence
//! of order `1 + μ`. [`newton::estimate_order`] measures the achieved rate
//! from a solve trace.
//!
//! The crate also ships the benchmark family used to validate all of this
//! end to end: constrained absolute value equations `Ax − |x| = b` over a
//! budget simplex ([`cave`]), plus a batch harness with Dolan–Moré
//! performance profiles ([`bench`]).
//!
//! # Quick example
//!
//! ```
//! use newton_inexp::cave;
//! use newton_inexp::newton::{self, ForcingSchedule, SolverConfig};
//!
//! let instance = cave::generate(20, 0.2, 7).unwrap();
//! let x0 = instance.start_point();
//! let problem = cave::CaveProblem::new(instance);
//!
//! let schedule = ForcingSchedule::Constant { eta: 1e-4, theta: 1e-1 };
//! let config = SolverConfig::with_schedule(schedule);
//! let trace = newton::solve(&problem, &x0, &config).unwrap();
//!
//! assert_eq!(trace.status, newton::SolveStatus::Converged);
//! ```
//!
//! A narrative guide with worked examples lives in the `book/` directory of
//! the repository; its code snippets are compiled as doc-tests.

// Indexed loops and NaN-rejecting comparisons are the house style of the
// numeric kernels here.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cave;
pub mod linalg;
pub mod linsolve;
pub mod newton;
pub mod projection;
pub mod sets;

pub use linalg::{CsrMatrix, DenseVector};
pub use newton::{ConstrainedProblem, ForcingSchedule, SolveTrace, SolverConfig};
pub use sets::FeasibleSet;

