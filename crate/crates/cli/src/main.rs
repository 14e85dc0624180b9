//! Batch command-line front end: instance generation, single solves,
//! benchmark sweeps, performance profiles, and convergence-rate studies.
//!
//! Exit codes are a stable contract:
//! `0` success, `2` usage error, `3` generation failure, `4` non-convergence,
//! `5` rate-signature failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use newton_inexp::bench::{self, rates, Measure, Method, MethodConfigs, SuiteOptions};
use newton_inexp::cave::{self, CaveError, CaveInstance, CaveProblem};
use newton_inexp::linalg::{self, DenseVector};
use newton_inexp::newton::{
    self, derived_eta, ConstrainedProblem, ForcingSchedule, ProjectionMode, SolveStatus,
    SolverConfig,
};
use newton_inexp::sets::SetDescriptor;

const EXIT_USAGE: u8 = 2;
const EXIT_GENERATION: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;
const EXIT_RATE_CHECK: u8 = 5;

#[derive(Parser)]
#[command(
    name = "newton-inexp",
    version,
    about = "Inexact Newton solver for constrained absolute value equations, \
             with generation, benchmarking, and rate-study commands"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write <out>.mtx + <out>.json
    Generate(GenerateArgs),
    /// Solve a stored instance and report status/iterations/residual
    Solve(SolveArgs),
    /// Run the two-method comparison suite over generated instances
    Bench(BenchArgs),
    /// Build performance profiles from an outcomes CSV
    Profile(ProfileArgs),
    /// Run a convergence-rate study and check the regime signature
    Rates(RatesArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path prefix (extension is replaced by .mtx / .json)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance path prefix as written by `generate`
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "inexp")]
    method: Method,
    /// Projection tolerance θ; defaults to 1e-1 (inexp) or 1e-8 (exp)
    #[arg(long)]
    theta: Option<f64>,
    /// How η is chosen: `auto` derives it from θ and Γ = ‖A‖ + 1
    #[arg(long, default_value = "auto")]
    eta_policy: EtaPolicy,
    /// Explicit η (the cap for scheduled policies); required unless `auto`
    #[arg(long)]
    eta: Option<f64>,
    /// Exponent for the residual-power policy, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// How infeasible trial points are pulled back onto the set
    #[arg(long, default_value = "condg")]
    projection: Projection,
    /// Write the full solve trace as JSON
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// JSON set descriptor overriding the instance's budget simplex
    #[arg(long)]
    set: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EtaPolicy {
    Auto,
    Constant,
    Vanishing,
    ResidualPower,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Projection {
    Condg,
    Exact,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated dimensions, e.g. --ns 200,1000
    #[arg(long, value_delimiter = ',', required = true)]
    ns: Vec<usize>,
    /// Instances per dimension
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0.003)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timing repetitions per run (the reported time is the median)
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Worker threads; defaults to $NEWTON_INEXP_JOBS or 1
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    /// Outcomes CSV produced by `bench`
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "time")]
    measure: MeasureArg,
    #[arg(long, default_value = "svg")]
    format: ProfileFormat,
    /// Output path; defaults to <in-stem>_profile_<measure>.<ext>
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MeasureArg {
    Time,
    Iterations,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Measure {
        match m {
            MeasureArg::Time => Measure::Time,
            MeasureArg::Iterations => Measure::Iterations,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ProfileFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    regime: RegimeArg,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value = "cave")]
    problem: ProblemArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RegimeArg {
    Constant,
    Vanishing,
    ResidualPower,
}

impl From<RegimeArg> for rates::Regime {
    fn from(r: RegimeArg) -> rates::Regime {
        match r {
            RegimeArg::Constant => rates::Regime::Constant,
            RegimeArg::Vanishing => rates::Regime::Vanishing,
            RegimeArg::ResidualPower => rates::Regime::ResidualPower,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ProblemArg {
    Cave,
    Smooth,
}

impl From<ProblemArg> for rates::RateProblem {
    fn from(p: ProblemArg) -> rates::RateProblem {
        match p {
            ProblemArg::Cave => rates::RateProblem::Cave,
            ProblemArg::Smooth => rates::RateProblem::Smooth,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Profile(args) => cmd_profile(args),
        Command::Rates(args) => cmd_rates(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    let instance = cave::generate(args.n, args.density, args.seed).map_err(|e| match e {
        CaveError::DimensionTooSmall(_) | CaveError::BadDensity(_) | CaveError::TooSparse(_) => {
            Failure::new(EXIT_USAGE, e.to_string())
        }
        other => Failure::new(EXIT_GENERATION, other.to_string()),
    })?;
    let (mtx, json) = instance
        .save(&args.out)
        .map_err(|e| Failure::new(EXIT_GENERATION, e.to_string()))?;
    // Re-measure the regularity guarantee rather than trusting construction.
    let est = linalg::sigma_extremes(instance.matrix(), 1e-9, 50_000)
        .map_err(|e| Failure::new(EXIT_GENERATION, e.to_string()))?;
    println!("wrote {} and {}", mtx.display(), json.display());
    println!(
        "n = {}, nnz = {}, sigma_min(A) = {:.6e}, sigma_max(A) = {:.6e}, d = {:.6e}",
        instance.n(),
        instance.matrix().nnz(),
        est.sigma_min,
        est.sigma_max,
        instance.budget()
    );
    Ok(())
}

/// Problem wrapper pairing a stored instance with a caller-supplied set.
struct CustomSetProblem {
    instance: CaveInstance,
    set: Box<dyn newton_inexp::FeasibleSet>,
}

impl ConstrainedProblem for CustomSetProblem {
    fn dimension(&self) -> usize {
        self.instance.n()
    }
    fn eval_f(&self, x: &DenseVector) -> DenseVector {
        self.instance.residual(x).expect("dimension checked")
    }
    fn clarke_element(&self, x: &DenseVector) -> newton_inexp::CsrMatrix {
        self.instance.clarke_element(x).expect("dimension checked")
    }
    fn feasible_set(&self) -> &dyn newton_inexp::FeasibleSet {
        self.set.as_ref()
    }
    fn known_solution(&self) -> Option<&DenseVector> {
        Some(self.instance.planted_solution())
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    for ext in ["mtx", "json"] {
        let path = args.instance.with_extension(ext);
        if !path.exists() {
            return Err(Failure::new(
                EXIT_USAGE,
                format!("instance file {} not found", path.display()),
            ));
        }
    }
    let instance =
        CaveInstance::load(&args.instance).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;

    let theta = args.theta.unwrap_or(match args.method {
        Method::Exp => bench::THETA_EXP,
        Method::Inexp => bench::THETA_INEXP,
    });
    let gamma = linalg::sigma_max(instance.matrix(), 1e-8, 20_000)
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?
        + 1.0;
    let schedule = match (args.eta_policy, args.eta) {
        (EtaPolicy::Auto, _) => ForcingSchedule::Constant {
            eta: derived_eta(theta, gamma, bench::LAMBDA_CAVE),
            theta,
        },
        (EtaPolicy::Constant, Some(eta)) => ForcingSchedule::Constant { eta, theta },
        (EtaPolicy::Vanishing, Some(eta)) => ForcingSchedule::Vanishing {
            eta0: eta,
            theta0: theta,
        },
        (EtaPolicy::ResidualPower, Some(eta)) => {
            if !(args.mu > 0.0 && args.mu <= 1.0) {
                return Err(Failure::new(
                    EXIT_USAGE,
                    format!("--mu must lie in (0, 1], got {}", args.mu),
                ));
            }
            ForcingSchedule::ResidualPower {
                mu: args.mu,
                eta0: eta,
                theta0: theta,
            }
        }
        (_, None) => {
            return Err(Failure::new(
                EXIT_USAGE,
                "--eta is required for non-auto eta policies",
            ))
        }
    };
    let mut config = SolverConfig::with_schedule(schedule);
    config.residual_tol = args.tol;
    config.max_outer = args.max_iter;
    config.max_inner_linear = Some(20_000);
    config.gamma_hint = Some(gamma);
    config.lambda_hint = Some(bench::LAMBDA_CAVE);
    config.projection_mode = match args.projection {
        Projection::Condg => ProjectionMode::CondG,
        Projection::Exact => ProjectionMode::Exact,
    };

    let x0 = instance.start_point();
    let trace = if let Some(set_path) = &args.set {
        let text = std::fs::read_to_string(set_path)
            .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", set_path.display())))?;
        let descriptor: SetDescriptor = serde_json::from_str(&text)
            .map_err(|e| Failure::new(EXIT_USAGE, format!("bad set descriptor: {e}")))?;
        let set = descriptor
            .build()
            .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
        if set.dimension() != instance.n() {
            return Err(Failure::new(
                EXIT_USAGE,
                format!(
                    "set dimension {} does not match instance dimension {}",
                    set.dimension(),
                    instance.n()
                ),
            ));
        }
        let problem = CustomSetProblem { instance, set };
        run_solve(&problem, &x0, &config)?
    } else {
        let problem = CaveProblem::new(instance);
        run_solve(&problem, &x0, &config)?
    };

    println!(
        "status: {:?}, iterations: {}, wall_time: {:.3e}s",
        trace.status,
        trace.iterations(),
        trace.wall_time
    );
    if let Some(path) = &args.trace_out {
        std::fs::write(path, trace.to_json())
            .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
        println!("trace written to {}", path.display());
    }
    match trace.status {
        SolveStatus::Converged => Ok(()),
        other => Err(Failure::new(
            EXIT_NO_CONVERGENCE,
            format!("solver finished with status {other:?}"),
        )),
    }
}

fn run_solve<P: ConstrainedProblem>(
    problem: &P,
    x0: &DenseVector,
    config: &SolverConfig,
) -> Result<newton::SolveTrace, Failure> {
    let trace = newton::solve(problem, x0, config)
        .map_err(|e| Failure::new(EXIT_NO_CONVERGENCE, e.to_string()))?;
    let residual = problem.eval_f(&trace.final_point).norm2();
    println!("final residual: {residual:.6e}");
    Ok(trace)
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    if args.count == 0 {
        return Err(Failure::new(EXIT_USAGE, "--count must be at least 1"));
    }
    let jobs = args
        .jobs
        .or_else(|| {
            std::env::var("NEWTON_INEXP_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(1);
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", args.out_dir.display())))?;

    let outcomes = bench::run_suite_with(
        &args.ns,
        args.count,
        args.density,
        args.seed,
        &MethodConfigs::standard(),
        SuiteOptions {
            repetitions: args.reps.max(1),
            jobs,
        },
    )
    .map_err(|e| Failure::new(EXIT_GENERATION, e.to_string()))?;
    if outcomes.is_empty() {
        return Err(Failure::new(EXIT_GENERATION, "no runs completed"));
    }

    let dir = &args.out_dir;
    let write =
        |r: Result<(), bench::BenchError>| r.map_err(|e| Failure::new(EXIT_GENERATION, e.to_string()));
    write(bench::write_outcomes_csv(&dir.join("outcomes.csv"), &outcomes))?;
    write(bench::write_outcomes_json(&dir.join("outcomes.json"), &outcomes))?;
    let summary = bench::summarize(&outcomes);
    write(bench::write_summary_csv(&dir.join("summary.csv"), &summary))?;
    write(bench::write_summary_json(&dir.join("summary.json"), &summary))?;
    for row in &summary {
        println!(
            "n = {:6}  {:6}  solved {:5.1}%  mean iterations {:6.2}  mean time {:.3e}s",
            row.n, row.method, row.percent_solved, row.mean_iterations, row.mean_time
        );
    }

    for &n in &args.ns {
        let subset: Vec<_> = outcomes.iter().filter(|o| o.n == n).cloned().collect();
        if subset.is_empty() {
            continue;
        }
        for (measure, tag) in [(Measure::Time, "time"), (Measure::Iterations, "iterations")] {
            let curves = bench::performance_profile(&subset, measure)
                .map_err(|e| Failure::new(EXIT_GENERATION, e.to_string()))?;
            let title = format!("performance profile, n = {n}, measure = {tag}");
            write(bench::write_profiles_svg(
                &dir.join(format!("profile_{tag}_n{n}.svg")),
                &curves,
                &title,
            ))?;
            write(bench::write_profiles_csv(
                &dir.join(format!("profile_{tag}_n{n}.csv")),
                &curves,
            ))?;
        }
    }
    println!("outputs written to {}", dir.display());
    Ok(())
}

fn cmd_profile(args: ProfileArgs) -> Result<(), Failure> {
    if !args.input.exists() {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("input file {} not found", args.input.display()),
        ));
    }
    let outcomes = bench::read_outcomes_csv(&args.input)
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let curves = bench::performance_profile(&outcomes, args.measure.into())
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let measure_tag = match args.measure {
        MeasureArg::Time => "time",
        MeasureArg::Iterations => "iterations",
    };
    let ext = match args.format {
        ProfileFormat::Csv => "csv",
        ProfileFormat::Json => "json",
        ProfileFormat::Svg => "svg",
    };
    let out = args.out.clone().unwrap_or_else(|| {
        let stem = args
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "outcomes".into());
        args.input
            .with_file_name(format!("{stem}_profile_{measure_tag}.{ext}"))
    });
    let result = match args.format {
        ProfileFormat::Csv => bench::write_profiles_csv(&out, &curves),
        ProfileFormat::Json => bench::write_profiles_json(&out, &curves),
        ProfileFormat::Svg => bench::write_profiles_svg(
            &out,
            &curves,
            &format!("performance profile, measure = {measure_tag}"),
        ),
    };
    result.map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    for curve in &curves {
        println!(
            "{}: efficiency rho(1) = {:.3}, robustness rho(inf) = {:.3}",
            curve.method,
            curve.rho_at(1.0),
            curve.rho_infinity()
        );
    }
    println!("profile written to {}", out.display());
    Ok(())
}

fn cmd_rates(args: RatesArgs) -> Result<(), Failure> {
    if !(args.mu > 0.0 && args.mu <= 1.0) {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("--mu must lie in (0, 1], got {}", args.mu),
        ));
    }
    let report = rates::run_rate_study(args.regime.into(), args.problem.into(), args.mu, args.seed)
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    println!(
        "regime: {:?}, problem: {:?}, status: {:?}, iterations: {}",
        report.regime, report.problem, report.status, report.iterations
    );
    println!(
        "estimated order: {:.3} ({:?}), contraction: {}",
        report.order, report.order_confidence, report.contraction
    );
    let ratios: Vec<String> = report
        .error_ratios
        .iter()
        .map(|r| format!("{r:.3e}"))
        .collect();
    println!("error ratios: [{}]", ratios.join(", "));
    if report.signature_ok {
        println!("signature: ok");
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_RATE_CHECK,
            "regime signature check failed",
        ))
    }
}
