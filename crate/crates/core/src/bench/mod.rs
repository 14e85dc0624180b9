//! Batch experiment harness: instance sweeps, Dolan–Moré performance
//! profiles, summary tables, and convergence-rate studies.
//!
//! The suite compares the two method variants on generated absolute-value
//! instances:
//!
//! * **exp** — exact-projection flavor: `θ = 1e-8`;
//! * **inexp** — inexact-projection flavor: `θ = 1e-1`.
//!
//! For both, the linear-solve tolerance is derived per instance as
//! `η = 0.9999 (1 − √(2θ)) / (0.5 Γ (1 + √(2θ)))` with `Γ = ‖A‖ + 1`, and a
//! run counts as solved when the residual drops below 1e-6 within 50 outer
//! iterations. Wall time per run is the median of repeated measurements.

mod emit;
mod profile;
pub mod rates;

pub use emit::{
    read_outcomes_csv, write_outcomes_csv, write_outcomes_json, write_profiles_csv,
    write_profiles_json, write_profiles_svg, write_summary_csv, write_summary_json,
};
pub use profile::{performance_profile, summarize, Measure, ProfileCurve, SummaryRow};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cave::{self, CaveError, CaveProblem};
use crate::linalg::{self, LinalgError};
use crate::newton::{
    self, derived_eta, ForcingSchedule, ProjectionMode, SolveError, SolveStatus, SolverConfig,
};

/// Solved means: residual below this within [`SOLVED_MAX_ITERATIONS`].
pub const SOLVED_RESIDUAL_TOL: f64 = 1e-6;
pub const SOLVED_MAX_ITERATIONS: usize = 50;

/// Projection tolerance of the exact-projection variant.
pub const THETA_EXP: f64 = 1e-8;
/// Projection tolerance of the inexact-projection variant.
pub const THETA_INEXP: f64 = 1e-1;
/// Inverse-Jacobian norm bound for the absolute-value family
/// (`σ_min(V) ≥ 2`, so `‖V⁻¹‖ ≤ 1/2`).
pub const LAMBDA_CAVE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("instance generation failed: {0}")]
    Generation(#[from] CaveError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("solver configuration rejected: {0}")]
    Solver(#[from] SolveError),
    #[error("profile requires outcomes; none were given")]
    NoOutcomes,
    #[error("methods do not share the instance set: {0}")]
    MismatchedInstances(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("rate study: {0}")]
    RateStudy(String),
}

/// Method label carried through outcomes, tables, and profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exp,
    Inexp,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Exp => "exp",
            Method::Inexp => "inexp",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exp" => Ok(Method::Exp),
            "inexp" => Ok(Method::Inexp),
            other => Err(format!("unknown method `{other}` (expected exp|inexp)")),
        }
    }
}

/// One (instance, method) result row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunOutcome {
    pub instance_seed: u64,
    pub n: usize,
    pub method: Method,
    pub solved: bool,
    pub iterations: usize,
    /// Median wall-clock seconds over the timing repetitions.
    pub wall_time: f64,
    /// Residual at the final iterate, recomputed from the instance; absent
    /// when the solver aborted before producing a point.
    pub final_residual: Option<f64>,
}

/// The two solver configurations under comparison. For constant schedules
/// the suite rederives `η` per instance from the measured `Γ = ‖A‖ + 1`.
#[derive(Clone, Debug)]
pub struct MethodConfigs {
    pub exp: SolverConfig,
    pub inexp: SolverConfig,
}

impl MethodConfigs {
    /// The published comparison protocol: `θ = 1e-8` (exp) vs `1e-1`
    /// (inexp), conditional-gradient projections capped at 100 inner
    /// iterations, residual tolerance 1e-6, 50 outer iterations.
    ///
    /// The `eta` fields are placeholders; [`run_suite`] overwrites them per
    /// instance via [`derived_eta`] once `Γ` is measured.
    pub fn standard() -> Self {
        let make = |theta: f64| {
            let mut config =
                SolverConfig::with_schedule(ForcingSchedule::Constant { eta: 0.0, theta });
            config.residual_tol = SOLVED_RESIDUAL_TOL;
            config.max_outer = SOLVED_MAX_ITERATIONS;
            config.max_inner_proj = 100;
            // Generous inner cap: the operator rescaling fixes σ_min(V) ≥ 2
            // but leaves σ_max at the draw's mercy, so condition numbers
            // vary by orders of magnitude across seeds.
            config.max_inner_linear = Some(20_000);
            config.lambda_hint = Some(LAMBDA_CAVE);
            config.projection_mode = ProjectionMode::CondG;
            config
        };
        Self {
            exp: make(THETA_EXP),
            inexp: make(THETA_INEXP),
        }
    }

    fn get(&self, method: Method) -> &SolverConfig {
        match method {
            Method::Exp => &self.exp,
            Method::Inexp => &self.inexp,
        }
    }
}

/// Suite execution knobs beyond the method configs.
#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    /// Timing repetitions per run; the reported time is their median.
    pub repetitions: usize,
    /// Worker threads across instances. Timing repetitions always run
    /// back-to-back on one worker.
    pub jobs: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            repetitions: 3,
            jobs: 1,
        }
    }
}

/// Runs the full sweep: `instances_per_n` instances per dimension, both
/// methods on each. Individual solver failures become unsolved rows;
/// generation failures abort the suite.
pub fn run_suite(
    ns: &[usize],
    instances_per_n: usize,
    density: f64,
    base_seed: u64,
    configs: &MethodConfigs,
) -> Result<Vec<RunOutcome>, BenchError> {
    run_suite_with(
        ns,
        instances_per_n,
        density,
        base_seed,
        configs,
        SuiteOptions::default(),
    )
}

/// [`run_suite`] with explicit repetition count and worker pool size.
pub fn run_suite_with(
    ns: &[usize],
    instances_per_n: usize,
    density: f64,
    base_seed: u64,
    configs: &MethodConfigs,
    options: SuiteOptions,
) -> Result<Vec<RunOutcome>, BenchError> {
    let jobs: Vec<(usize, u64)> = ns
        .iter()
        .flat_map(|&n| (0..instances_per_n as u64).map(move |i| (n, base_seed + i)))
        .collect();
    let reps = options.repetitions.max(1);
    let workers = options.jobs.max(1).min(jobs.len().max(1));

    let run_one = |&(n, seed): &(usize, u64)| -> Result<Vec<RunOutcome>, BenchError> {
        let instance = cave::generate(n, density, seed)?;
        let gamma = linalg::sigma_max(instance.matrix(), 1e-8, 20_000)? + 1.0;
        let x0 = instance.start_point();
        let problem = CaveProblem::new(instance);
        let mut rows = Vec::with_capacity(2);
        for method in [Method::Exp, Method::Inexp] {
            let mut config = configs.get(method).clone();
            config.gamma_hint = Some(gamma);
            if let ForcingSchedule::Constant { theta, .. } = config.schedule {
                let lambda = config.lambda_hint.unwrap_or(LAMBDA_CAVE);
                config.schedule = ForcingSchedule::Constant {
                    eta: derived_eta(theta, gamma, lambda),
                    theta,
                };
            }
            rows.push(run_instance(&problem, &x0, &config, method, seed, n, reps));
        }
        Ok(rows)
    };

    let mut outcomes: Vec<RunOutcome> = if workers <= 1 {
        let mut all = Vec::with_capacity(jobs.len() * 2);
        for job in &jobs {
            all.extend(run_one(job)?);
        }
        all
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let results = std::sync::Mutex::new(Vec::with_capacity(jobs.len() * 2));
        let failure = std::sync::Mutex::new(None);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if idx >= jobs.len() {
                        break;
                    }
                    match run_one(&jobs[idx]) {
                        Ok(rows) => results.lock().unwrap().extend(rows),
                        Err(e) => {
                            *failure.lock().unwrap() = Some(e);
                            break;
                        }
                    }
                });
            }
        });
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        results.into_inner().unwrap()
    };

    // Deterministic order regardless of worker interleaving.
    outcomes.sort_by_key(|o| (o.n, o.instance_seed, o.method));
    Ok(outcomes)
}

fn run_instance(
    problem: &CaveProblem,
    x0: &crate::linalg::DenseVector,
    config: &SolverConfig,
    method: Method,
    seed: u64,
    n: usize,
    reps: usize,
) -> RunOutcome {
    let mut times = Vec::with_capacity(reps);
    let mut kept: Option<(bool, usize, Option<f64>)> = None;
    for _ in 0..reps {
        match newton::solve(problem, x0, config) {
            Ok(trace) => {
                times.push(trace.wall_time);
                if kept.is_none() {
                    let final_residual = problem
                        .instance()
                        .residual(&trace.final_point)
                        .map(|r| r.norm2())
                        .ok();
                    let solved = trace.status == SolveStatus::Converged
                        && trace.iterations() <= SOLVED_MAX_ITERATIONS
                        && final_residual.is_some_and(|r| r < SOLVED_RESIDUAL_TOL);
                    kept = Some((solved, trace.iterations(), final_residual));
                }
            }
            Err(_) => {
                if kept.is_none() {
                    kept = Some((false, 0, None));
                }
            }
        }
    }
    let (solved, iterations, final_residual) = kept.unwrap_or((false, 0, None));
    RunOutcome {
        instance_seed: seed,
        n,
        method,
        solved,
        iterations,
        wall_time: median(&mut times),
        final_residual,
    }
}

fn median(times: &mut [f64]) -> f64 {
    if times.is_empty() {
        return 0.0;
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = times.len() / 2;
    if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dimension_list_gives_empty_outcomes() {
        let outcomes = run_suite(&[], 5, 0.1, 0, &MethodConfigs::standard()).unwrap();
        assert!(outcomes.is_empty());
    }

    #[test]
    fn small_suite_solves_everything() {
        let outcomes = run_suite(&[20], 3, 0.2, 1, &MethodConfigs::standard()).unwrap();
        assert_eq!(outcomes.len(), 6);
        for o in &outcomes {
            assert!(o.solved, "seed {} method {} unsolved", o.instance_seed, o.method);
            assert!(o.iterations <= SOLVED_MAX_ITERATIONS);
            assert!(o.final_residual.unwrap() < SOLVED_RESIDUAL_TOL);
        }
        // deterministic ordering: (n, seed, method)
        let keys: Vec<_> = outcomes
            .iter()
            .map(|o| (o.n, o.instance_seed, o.method))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn parallel_matches_sequential_outcomes() {
        let configs = MethodConfigs::standard();
        let seq = run_suite(&[15, 20], 2, 0.2, 7, &configs).unwrap();
        let par = run_suite_with(
            &[15, 20],
            2,
            0.2,
            7,
            &configs,
            SuiteOptions {
                repetitions: 1,
                jobs: 4,
            },
        )
        .unwrap();
        assert_eq!(seq.len(), par.len());
        for (a, b) in seq.iter().zip(&par) {
            assert_eq!((a.n, a.instance_seed, a.method), (b.n, b.instance_seed, b.method));
            assert_eq!(a.solved, b.solved);
            assert_eq!(a.iterations, b.iterations);
        }
    }
}
