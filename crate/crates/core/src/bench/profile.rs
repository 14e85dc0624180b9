//! Dolan–Moré performance profiles and summary tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BenchError, Method, RunOutcome};

/// Performance measure the profile ratios are computed over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Time,
    Iterations,
}

impl std::str::FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "time" => Ok(Measure::Time),
            "iterations" => Ok(Measure::Iterations),
            other => Err(format!("unknown measure `{other}` (expected time|iterations)")),
        }
    }
}

/// One method's cumulative curve `ρ(τ)`: right-continuous, non-decreasing
/// step points with `ρ(∞)` equal to the fraction solved.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub method: String,
    /// `(τ, ρ(τ))` step points, τ ascending and ρ non-decreasing.
    pub breakpoints: Vec<(f64, f64)>,
}

impl ProfileCurve {
    /// `ρ(τ)` evaluated from the step points.
    pub fn rho_at(&self, tau: f64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(t, _)| *t <= tau)
            .last()
            .map_or(0.0, |&(_, rho)| rho)
    }

    /// Fraction solved: the curve's plateau.
    pub fn rho_infinity(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |&(_, rho)| rho)
    }
}

/// Builds one curve per method. Per problem `p` (an `(n, seed)` pair) and
/// method `s`, the ratio is `r_{p,s} = m_{p,s} / min_s m_{p,s}` with
/// unsolved runs assigned `+∞`; `ρ_s(τ)` is the fraction of problems with
/// `r_{p,s} ≤ τ`. Every method must have run every problem.
pub fn performance_profile(
    outcomes: &[RunOutcome],
    measure: Measure,
) -> Result<Vec<ProfileCurve>, BenchError> {
    if outcomes.is_empty() {
        return Err(BenchError::NoOutcomes);
    }
    let mut methods: Vec<Method> = outcomes.iter().map(|o| o.method).collect();
    methods.sort();
    methods.dedup();

    type Problem = (usize, u64);
    let mut table: BTreeMap<Problem, BTreeMap<Method, f64>> = BTreeMap::new();
    for o in outcomes {
        let value = if !o.solved {
            f64::INFINITY
        } else {
            match measure {
                Measure::Time => o.wall_time,
                Measure::Iterations => o.iterations as f64,
            }
        };
        let slot = table
            .entry((o.n, o.instance_seed))
            .or_default()
            .insert(o.method, value);
        if slot.is_some() {
            return Err(BenchError::MismatchedInstances(format!(
                "duplicate outcome for n={} seed={} method={}",
                o.n, o.instance_seed, o.method
            )));
        }
    }
    for (problem, row) in &table {
        if row.len() != methods.len() {
            return Err(BenchError::MismatchedInstances(format!(
                "problem n={} seed={} is missing methods",
                problem.0, problem.1
            )));
        }
    }

    let problem_count = table.len() as f64;
    let mut ratios: BTreeMap<Method, Vec<f64>> =
        methods.iter().map(|&m| (m, Vec::new())).collect();
    for row in table.values() {
        let best = row
            .values()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .max(f64::MIN_POSITIVE);
        for (&method, &value) in row {
            let r = if value.is_finite() {
                (value / best).max(1.0)
            } else {
                f64::INFINITY
            };
            ratios.get_mut(&method).unwrap().push(r);
        }
    }

    Ok(methods
        .iter()
        .map(|&method| {
            let rs = &mut ratios.get_mut(&method).unwrap()[..];
            rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut breakpoints: Vec<(f64, f64)> = Vec::new();
            let mut solved_so_far = 0usize;
            for &r in rs.iter() {
                if !r.is_finite() {
                    break;
                }
                solved_so_far += 1;
                let rho = solved_so_far as f64 / problem_count;
                match breakpoints.last_mut() {
                    Some(last) if last.0 == r => last.1 = rho,
                    _ => breakpoints.push((r, rho)),
                }
            }
            if breakpoints.first().is_none_or(|&(t, _)| t > 1.0) {
                breakpoints.insert(0, (1.0, 0.0));
            }
            ProfileCurve {
                method: method.label().to_string(),
                breakpoints,
            }
        })
        .collect())
}

/// One summary row per `(n, method)` group: the share of solved runs plus
/// mean iteration count and mean wall time over the group.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub method: Method,
    pub percent_solved: f64,
    pub mean_iterations: f64,
    pub mean_time: f64,
}

/// Aggregates outcomes into summary rows, sorted by `(n, method)`. Empty
/// input summarizes to an empty table.
pub fn summarize(outcomes: &[RunOutcome]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, Method), Vec<&RunOutcome>> = BTreeMap::new();
    for o in outcomes {
        groups.entry((o.n, o.method)).or_default().push(o);
    }
    groups
        .into_iter()
        .map(|((n, method), rows)| {
            let count = rows.len() as f64;
            SummaryRow {
                n,
                method,
                percent_solved: 100.0 * rows.iter().filter(|o| o.solved).count() as f64 / count,
                mean_iterations: rows.iter().map(|o| o.iterations as f64).sum::<f64>() / count,
                mean_time: rows.iter().map(|o| o.wall_time).sum::<f64>() / count,
            }
        })
        .collect()
}
