//! Feasible sets: membership, linear minimization oracles, exact projections
//! and (for polytopes) vertex enumeration.
//!
//! A [`FeasibleSet`] is everything the solver needs to know about the
//! constraint set `C`. The conditional-gradient projection only ever touches
//! the set through [`FeasibleSet::lmo`], which is what makes inexact
//! projection cheap; the exact projection and the vertex list exist for the
//! sets where they are easy and are what the certificate verifier leans on.
//!
//! Three concrete sets are provided:
//!
//! * [`BudgetSimplex`] — `{x : Σ x_i ≤ d, x ≥ 0}`, the constraint set of the
//!   absolute-value benchmark family;
//! * [`BoxSet`] — bound constraints with componentwise clamping;
//! * [`Ball`] — a Euclidean ball (not polyhedral; no vertex list).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kahan_sum, DenseVector};

/// Default membership tolerance. Feasibility inside the solver is kept by
/// construction; the tolerance exists to absorb I/O round-trips and the last
/// ulp of convex-combination arithmetic.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Vertex enumeration guard for boxes: 2^n vertices are only materialized
/// up to this dimension.
pub const BOX_VERTEX_LIMIT: usize = 16;

#[derive(Debug, Error)]
pub enum SetError {
    #[error("dimension mismatch: set has dimension {expected}, vector has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tolerance must be nonnegative")]
    NegativeTolerance,
    #[error("set does not support an exact projection")]
    NoExactProjection,
    #[error("set is not polyhedral: no vertex list")]
    NotPolyhedral,
    #[error("vertex enumeration over {dimension} dimensions exceeds the limit of {limit}")]
    TooManyVertices { dimension: usize, limit: usize },
    #[error("invalid set parameter: {0}")]
    InvalidParameter(String),
}

/// Contract for constraint sets usable by the solver.
pub trait FeasibleSet: Send + Sync {
    fn dimension(&self) -> usize;

    /// Whether [`FeasibleSet::exact_project`] is available.
    fn has_exact_projection(&self) -> bool;

    /// Whether [`FeasibleSet::vertices`] is available (possibly size-guarded).
    fn is_polyhedral(&self) -> bool;

    /// True iff every defining constraint holds within additive `tol`.
    fn contains(&self, x: &DenseVector, tol: f64) -> Result<bool, SetError>;

    /// A minimizer of `⟨cost, z⟩` over the set. Ties between vertices break
    /// toward the lowest index so traces are reproducible.
    fn lmo(&self, cost: &DenseVector) -> Result<DenseVector, SetError>;

    /// The Euclidean projection onto the set.
    fn exact_project(&self, y: &DenseVector) -> Result<DenseVector, SetError>;

    /// Finite vertex list for polyhedral sets.
    fn vertices(&self) -> Result<Vec<DenseVector>, SetError>;

    /// Repairs the last-ulp constraint drift of convex-combination
    /// arithmetic, moving the point by at most a few ulps *into* the set.
    /// Identity for sets whose combinations are exactly closed.
    fn snap_inward(&self, x: DenseVector) -> DenseVector {
        x
    }

    /// A cheap feasible point near `y`, when the set's structure offers one
    /// (used to warm-start iterative projections). Not necessarily the
    /// projection; `None` when no shortcut exists.
    fn feasible_repair(&self, _y: &DenseVector) -> Option<DenseVector> {
        None
    }
}

fn check_dim(set: &dyn FeasibleSet, x: &DenseVector) -> Result<(), SetError> {
    if x.len() != set.dimension() {
        return Err(SetError::DimensionMismatch {
            expected: set.dimension(),
            found: x.len(),
        });
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<(), SetError> {
    if tol < 0.0 || tol.is_nan() {
        return Err(SetError::NegativeTolerance);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Budget simplex
// ---------------------------------------------------------------------------

/// `{x ∈ ℝⁿ : Σ x_i ≤ d, x_i ≥ 0}` — the scaled simplex with its interior.
///
/// Vertices are the origin and `d·e_i`. The exact projection first clamps to
/// the nonnegative orthant; if the budget still binds, it projects onto the
/// face `Σ = d` by the sort-and-threshold rule: find `τ` with
/// `Σ max(y_i − τ, 0) = d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BudgetSimplex {
    n: usize,
    budget: f64,
}

impl BudgetSimplex {
    pub fn new(n: usize, budget: f64) -> Result<Self, SetError> {
        if n == 0 {
            return Err(SetError::InvalidParameter("dimension must be ≥ 1".into()));
        }
        if !(budget > 0.0) || !budget.is_finite() {
            return Err(SetError::InvalidParameter(
                "budget must be positive and finite".into(),
            ));
        }
        Ok(Self { n, budget })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    fn budget_sum(&self, x: &DenseVector) -> f64 {
        kahan_sum(x.iter().copied())
    }
}

impl FeasibleSet for BudgetSimplex {
    fn dimension(&self) -> usize {
        self.n
    }

    fn has_exact_projection(&self) -> bool {
        true
    }

    fn is_polyhedral(&self) -> bool {
        true
    }

    fn contains(&self, x: &DenseVector, tol: f64) -> Result<bool, SetError> {
        check_dim(self, x)?;
        check_tol(tol)?;
        let nonneg = x.iter().all(|&v| v >= -tol);
        Ok(nonneg && self.budget_sum(x) <= self.budget + tol)
    }

    fn lmo(&self, cost: &DenseVector) -> Result<DenseVector, SetError> {
        check_dim(self, cost)?;
        let mut best = 0usize;
        for i in 1..self.n {
            if cost[i] < cost[best] {
                best = i;
            }
        }
        if cost[best] >= 0.0 {
            Ok(DenseVector::zeros(self.n))
        } else {
            Ok(DenseVector::scaled_basis(self.n, best, self.budget))
        }
    }

    fn exact_project(&self, y: &DenseVector) -> Result<DenseVector, SetError> {
        check_dim(self, y)?;
        let clamped: Vec<f64> = y.iter().map(|&v| v.max(0.0)).collect();
        if kahan_sum(clamped.iter().copied()) <= self.budget {
            return Ok(DenseVector::new(clamped).expect("finite"));
        }
        // Budget binds: project onto {Σ = d, x ≥ 0} by sort and threshold.
        let mut sorted = y.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut prefix = 0.0;
        let mut tau = 0.0;
        for (j, &v) in sorted.iter().enumerate() {
            prefix += v;
            let candidate = (prefix - self.budget) / (j + 1) as f64;
            if j + 1 == sorted.len() || sorted[j + 1] <= candidate {
                tau = candidate;
                break;
            }
        }
        let w: Vec<f64> = y.iter().map(|&v| (v - tau).max(0.0)).collect();
        Ok(self.snap_inward(DenseVector::new(w).expect("finite")))
    }

    fn vertices(&self) -> Result<Vec<DenseVector>, SetError> {
        let mut vs = Vec::with_capacity(self.n + 1);
        vs.push(DenseVector::zeros(self.n));
        for i in 0..self.n {
            vs.push(DenseVector::scaled_basis(self.n, i, self.budget));
        }
        Ok(vs)
    }

    fn snap_inward(&self, mut x: DenseVector) -> DenseVector {
        // Convex combinations of feasible points keep x ≥ 0 exactly, but the
        // compensated sum can exceed the budget by a few ulps. Scale down
        // until it does not.
        for _ in 0..4 {
            let sum = self.budget_sum(&x);
            if sum <= self.budget {
                break;
            }
            let scale = self.budget / sum;
            x.scale_in_place(scale.min(1.0 - f64::EPSILON * 0.5));
        }
        x
    }

    /// Clamp negatives to zero, then rescale proportionally into the budget.
    /// O(n) and feasible, but not the projection when the budget binds.
    fn feasible_repair(&self, y: &DenseVector) -> Option<DenseVector> {
        let clamped = DenseVector::from_fn(self.n, |i| y[i].max(0.0));
        Some(self.snap_inward(clamped))
    }
}

// ---------------------------------------------------------------------------
// Box
// ---------------------------------------------------------------------------

/// Bound constraints `lower ≤ x ≤ upper`. Exact projection is clamping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxSet {
    lower: DenseVector,
    upper: DenseVector,
}

impl BoxSet {
    pub fn new(lower: DenseVector, upper: DenseVector) -> Result<Self, SetError> {
        if lower.len() != upper.len() {
            return Err(SetError::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(SetError::InvalidParameter(
                "lower bound exceeds upper bound".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// `[-half_width, half_width]ⁿ`.
    pub fn centered(n: usize, half_width: f64) -> Result<Self, SetError> {
        Self::new(
            DenseVector::constant(n, -half_width),
            DenseVector::constant(n, half_width),
        )
    }
}

impl FeasibleSet for BoxSet {
    fn dimension(&self) -> usize {
        self.lower.len()
    }

    fn has_exact_projection(&self) -> bool {
        true
    }

    fn is_polyhedral(&self) -> bool {
        true
    }

    fn contains(&self, x: &DenseVector, tol: f64) -> Result<bool, SetError> {
        check_dim(self, x)?;
        check_tol(tol)?;
        Ok(x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol))
    }

    fn lmo(&self, cost: &DenseVector) -> Result<DenseVector, SetError> {
        check_dim(self, cost)?;
        Ok(DenseVector::from_fn(self.dimension(), |i| {
            if cost[i] < 0.0 {
                self.upper[i]
            } else {
                self.lower[i]
            }
        }))
    }

    fn exact_project(&self, y: &DenseVector) -> Result<DenseVector, SetError> {
        check_dim(self, y)?;
        Ok(DenseVector::from_fn(self.dimension(), |i| {
            y[i].clamp(self.lower[i], self.upper[i])
        }))
    }

    fn vertices(&self) -> Result<Vec<DenseVector>, SetError> {
        let n = self.dimension();
        if n > BOX_VERTEX_LIMIT {
            return Err(SetError::TooManyVertices {
                dimension: n,
                limit: BOX_VERTEX_LIMIT,
            });
        }
        Ok((0..1usize << n)
            .map(|mask| {
                DenseVector::from_fn(n, |i| {
                    if mask >> i & 1 == 1 {
                        self.upper[i]
                    } else {
                        self.lower[i]
                    }
                })
            })
            .collect())
    }

    fn snap_inward(&self, x: DenseVector) -> DenseVector {
        DenseVector::from_fn(self.dimension(), |i| {
            x[i].clamp(self.lower[i], self.upper[i])
        })
    }

    fn feasible_repair(&self, y: &DenseVector) -> Option<DenseVector> {
        self.exact_project(y).ok()
    }
}

// ---------------------------------------------------------------------------
// Ball
// ---------------------------------------------------------------------------

/// Euclidean ball `{x : ‖x − center‖ ≤ radius}`. Exact projection is radial
/// scaling; the set is smooth, so there is no vertex list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ball {
    center: DenseVector,
    radius: f64,
}

impl Ball {
    pub fn new(center: DenseVector, radius: f64) -> Result<Self, SetError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(SetError::InvalidParameter(
                "radius must be positive and finite".into(),
            ));
        }
        Ok(Self { center, radius })
    }
}

impl FeasibleSet for Ball {
    fn dimension(&self) -> usize {
        self.center.len()
    }

    fn has_exact_projection(&self) -> bool {
        true
    }

    fn is_polyhedral(&self) -> bool {
        false
    }

    fn contains(&self, x: &DenseVector, tol: f64) -> Result<bool, SetError> {
        check_dim(self, x)?;
        check_tol(tol)?;
        Ok(x.distance(&self.center) <= self.radius + tol)
    }

    fn lmo(&self, cost: &DenseVector) -> Result<DenseVector, SetError> {
        check_dim(self, cost)?;
        let norm = cost.norm2();
        if norm == 0.0 {
            return Ok(self.center.clone());
        }
        Ok(self.center.add_scaled(-self.radius / norm, cost))
    }

    fn exact_project(&self, y: &DenseVector) -> Result<DenseVector, SetError> {
        check_dim(self, y)?;
        let offset = y.sub(&self.center);
        let dist = offset.norm2();
        if dist <= self.radius {
            return Ok(y.clone());
        }
        Ok(self.center.add_scaled(self.radius / dist, &offset))
    }

    fn vertices(&self) -> Result<Vec<DenseVector>, SetError> {
        Err(SetError::NotPolyhedral)
    }

    fn snap_inward(&self, x: DenseVector) -> DenseVector {
        let offset = x.sub(&self.center);
        let dist = offset.norm2();
        if dist <= self.radius {
            x
        } else {
            self.center.add_scaled(self.radius / dist, &offset)
        }
    }

    fn feasible_repair(&self, y: &DenseVector) -> Option<DenseVector> {
        self.exact_project(y).ok()
    }
}

// ---------------------------------------------------------------------------
// JSON descriptor
// ---------------------------------------------------------------------------

/// Serializable description of a feasible set, as consumed by the CLI.
///
/// ```
/// use newton_inexp::sets::SetDescriptor;
/// let d: SetDescriptor =
///     serde_json::from_str(r#"{"type":"budget_simplex","n":3,"d":2.5}"#).unwrap();
/// let set = d.build().unwrap();
/// assert_eq!(set.dimension(), 3);
/// ```
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetDescriptor {
    BudgetSimplex { n: usize, d: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl SetDescriptor {
    pub fn build(&self) -> Result<Box<dyn FeasibleSet>, SetError> {
        match self {
            SetDescriptor::BudgetSimplex { n, d } => {
                Ok(Box::new(BudgetSimplex::new(*n, *d)?))
            }
            SetDescriptor::Box { lower, upper } => {
                let l = DenseVector::new(lower.clone())
                    .map_err(|e| SetError::InvalidParameter(e.to_string()))?;
                let u = DenseVector::new(upper.clone())
                    .map_err(|e| SetError::InvalidParameter(e.to_string()))?;
                Ok(Box::new(BoxSet::new(l, u)?))
            }
            SetDescriptor::Ball { center, radius } => {
                let c = DenseVector::new(center.clone())
                    .map_err(|e| SetError::InvalidParameter(e.to_string()))?;
                Ok(Box::new(Ball::new(c, *radius)?))
            }
        }
    }
}
