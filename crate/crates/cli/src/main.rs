//! `blockcoord`: run solvers, evaluate bounds and certify them from the shell.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numeric failure, 4 failed
//! certification.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blockcoord::arcd::{arcd_run_gamma, estimate_sequence_check, EsCheckReport};
use blockcoord::harness::{
    certify_with_reference, es_probes, estimate_expectation, reference_solve, run_method,
    CertifyParams, Method, Status, Theorem, DEFAULT_TOL,
};
use blockcoord::instances;
use blockcoord::rates::{
    k_grid, ln_arcd_bound_envelope, ln_nesterov_arcd_bound, rbcd_bound_general, rbcd_highprob_k,
    rt_bounds, rt_expected, rt_strong_factor, strong_factor, BoundInputs, BoundReport,
};
use blockcoord::rbcd::SolverConfig;
use blockcoord::{Error, Problem};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "blockcoord",
    version,
    about = "Randomized block-coordinate methods for composite convex problems"
)]
struct Cli {
    /// Worker threads for multi-run commands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write its trace as CSV.
    Solve(SolveArgs),
    /// Estimate the expected optimality gap over seeded runs.
    Expect(ExpectArgs),
    /// Evaluate the convergence bounds and complexity thresholds.
    Bounds(BoundsArgs),
    /// Check a convergence guarantee statistically.
    Certify(CertifyArgs),
    /// Verify the accelerated method's estimate sequence along one run.
    CheckEs(CheckEsArgs),
    /// Compare the bounds with the earlier ones.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rbcd,
    Arcd,
    ArcdSimple,
}

#[derive(Args)]
struct ProblemArg {
    /// Problem JSON file, or the name of a bundled problem.
    #[arg(long)]
    problem: String,
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, env = "BLOCKCOORD_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArg,
    #[arg(long, value_enum, default_value = "rbcd")]
    method: MethodArg,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// `γ_0` of the accelerated method (`α_{-1} = √γ_0` for the simple form).
    #[arg(long, default_value_t = 1.0)]
    gamma0: f64,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Check the per-step descent inequality (RBCD).
    #[arg(long)]
    verify: bool,
    /// Record `‖g(x)‖*_L` at record points.
    #[arg(long)]
    gdual: bool,
    /// Fill the gap column using a reference solve.
    #[arg(long)]
    gap: bool,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpectArgs {
    #[command(flatten)]
    problem: ProblemArg,
    #[arg(long, value_enum, default_value = "rbcd")]
    method: MethodArg,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 200)]
    runs: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = 1.0)]
    gamma0: f64,
    #[arg(long, default_value_t = 10)]
    record_every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    /// Bound inputs as JSON (fields n, r0, delta0, mu_f, mu_psi, rbar0, gamma0, c, eps, rho).
    #[arg(long, conflicts_with_all = ["problem", "n"])]
    inputs: Option<PathBuf>,
    /// Derive R_0, Δ_0 and μ from a problem's reference solution.
    #[arg(long, conflicts_with = "n")]
    problem: Option<String>,
    #[arg(long, requires_all = ["r0", "delta0"])]
    n: Option<usize>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    mu_f: Option<f64>,
    #[arg(long)]
    mu_psi: Option<f64>,
    #[arg(long)]
    rbar0: Option<f64>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[arg(long, default_value_t = 1000)]
    kmax: usize,
    /// Grid intervals between 0 and kmax.
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    problem: ProblemArg,
    /// One of 3.1, 3.1-strong, 3.2, 3.2-strong, 3.3, 4.1, es.
    #[arg(long)]
    theorem: String,
    #[arg(long, default_value_t = 400)]
    runs: usize,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 20)]
    record_every: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = 0.1)]
    eps_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    #[arg(long, default_value_t = 200)]
    batches: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma0: f64,
    #[arg(long, default_value_t = 50)]
    probes: usize,
    #[arg(long, default_value_t = 200)]
    rbar_samples: usize,
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckEsArgs {
    #[command(flatten)]
    problem: ProblemArg,
    #[arg(long, default_value_t = 1.0)]
    gamma0: f64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Random probe points around `x*`.
    #[arg(long, default_value_t = 50)]
    probes: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Against {
    Rt,
    Nesterov,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_enum)]
    against: Against,
    #[command(flatten)]
    inputs: InputArgs,
    #[arg(long, default_value_t = 1_000_000)]
    kmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numeric() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load_problem(arg: &str) -> CliResult<Problem> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(Problem::load(path)?);
    }
    instances::bundled(arg).ok_or_else(|| {
        input_error(format!(
            "problem {arg:?} is neither a file nor a bundled problem ({})",
            instances::BUNDLED.join(", ")
        ))
    })
}

fn check_out(out: &Option<PathBuf>) -> CliResult<()> {
    let Some(path) = out else { return Ok(()) };
    if path.is_dir() {
        return Err(input_error(format!(
            "output {} is a directory",
            path.display()
        )));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(input_error(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| input_error(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn method(m: MethodArg, gamma0: f64) -> Method {
    match m {
        MethodArg::Rbcd => Method::Rbcd,
        MethodArg::Arcd => Method::ArcdGamma { gamma0 },
        MethodArg::ArcdSimple => Method::ArcdSimple {
            alpha_prev: gamma0.sqrt(),
        },
    }
}

fn require_smooth(problem: &Problem, m: MethodArg) -> CliResult<()> {
    if !matches!(m, MethodArg::Rbcd) && !problem.is_smooth_only() {
        return Err(input_error(
            "the accelerated method applies to unconstrained smooth minimization only; the problem's regularizer must be zero",
        ));
    }
    Ok(())
}

fn solve(a: SolveArgs) -> CliResult<()> {
    check_out(&a.out)?;
    let problem = load_problem(&a.problem.problem)?;
    require_smooth(&problem, a.method)?;
    let config = SolverConfig::new(a.iters, a.seed.seed)
        .record_every(a.record_every)
        .verify(a.verify)
        .with_gdual(a.gdual);
    config.validate()?;
    let f_star = if a.gap {
        Some(reference_solve(&problem, DEFAULT_TOL)?.f_star)
    } else {
        None
    };
    let trace = run_method(&problem, method(a.method, a.gamma0), &config)?;
    emit(&a.out, &trace.to_csv(f_star))
}

fn expect(a: ExpectArgs) -> CliResult<()> {
    check_out(&a.out)?;
    let problem = load_problem(&a.problem.problem)?;
    require_smooth(&problem, a.method)?;
    let config = SolverConfig::new(a.iters, a.seed.seed).record_every(a.record_every);
    config.validate()?;
    let reference = reference_solve(&problem, DEFAULT_TOL)?;
    let curve = estimate_expectation(
        &problem,
        method(a.method, a.gamma0),
        &config,
        a.runs,
        reference.f_star,
    )?;
    emit(&a.out, &curve.to_csv())
}

fn bound_inputs(a: &InputArgs) -> CliResult<BoundInputs> {
    let mut inp = if let Some(path) = &a.inputs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?
    } else if let Some(name) = &a.problem {
        let problem = load_problem(name)?;
        let r = reference_solve(&problem, DEFAULT_TOL)?;
        BoundInputs {
            mu_f: r.mu_f,
            mu_psi: r.mu_psi,
            ..BoundInputs::new(problem.n_blocks(), r.r0, r.delta0.max(0.0))
        }
    } else {
        match (a.n, a.r0, a.delta0) {
            (Some(n), Some(r0), Some(delta0)) => BoundInputs::new(n, r0, delta0),
            _ => {
                return Err(input_error(
                    "give --inputs FILE, --problem, or --n with --r0 and --delta0",
                ))
            }
        }
    };
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut inp.mu_f, a.mu_f);
    set(&mut inp.mu_psi, a.mu_psi);
    set(&mut inp.gamma0, a.gamma0);
    inp.rbar0 = a.rbar0.or(inp.rbar0);
    inp.c = a.c.or(inp.c);
    inp.eps = a.eps.or(inp.eps);
    inp.rho = a.rho.or(inp.rho);
    inp.validate()?;
    Ok(inp)
}

fn bounds(a: BoundsArgs) -> CliResult<()> {
    check_out(&a.out)?;
    let inputs = bound_inputs(&a.inputs)?;
    let report = BoundReport::build(&inputs, &k_grid(a.kmax, a.points))?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    emit(&a.out, &(report.to_json() + "\n"))
}

fn certify(a: CertifyArgs) -> CliResult<()> {
    check_out(&a.out)?;
    let theorem: Theorem = a.theorem.parse()?;
    let problem = load_problem(&a.problem.problem)?;
    let params = CertifyParams {
        runs: a.runs,
        iters: a.iters,
        record_every: a.record_every,
        seed: a.seed.seed,
        eps_frac: a.eps_frac,
        rho: a.rho,
        batches: a.batches,
        gamma0: a.gamma0,
        probes: a.probes,
        z: 3.0,
        rbar_samples: a.rbar_samples,
        budget: a.budget,
    };
    let reference = reference_solve(&problem, DEFAULT_TOL)?;
    let report = certify_with_reference(&problem, &reference, theorem, &params)?;
    emit(&a.out, &(report.to_json() + "\n"))?;
    eprintln!("{}", report.summary());
    certification_outcome(theorem, report.status)
}

fn certification_outcome(theorem: Theorem, status: Status) -> CliResult<()> {
    match status {
        Status::Fail => Err(Failure {
            code: 4,
            message: format!("certification of {theorem} failed"),
        }),
        Status::Pass | Status::BudgetSkipped => Ok(()),
    }
}

fn check_es(a: CheckEsArgs) -> CliResult<()> {
    check_out(&a.out)?;
    let problem = load_problem(&a.problem.problem)?;
    require_smooth(&problem, MethodArg::Arcd)?;
    let reference = reference_solve(&problem, DEFAULT_TOL)?;
    let run = arcd_run_gamma(
        &problem,
        a.gamma0,
        &SolverConfig::new(a.iters, a.seed.seed),
        true,
    )?;
    let log = run.es.expect("estimate-sequence tracking was requested");
    let probes = es_probes(&reference, a.probes, a.seed.seed);
    let report: EsCheckReport = estimate_sequence_check(&problem, &log, &probes)?;
    emit(
        &a.out,
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;
    if !report.passed {
        return Err(Failure {
            code: 3,
            message: format!(
                "estimate sequence mismatch at k = {:?} (relative error {:e})",
                report.first_failure, report.max_rel_error
            ),
        });
    }
    eprintln!(
        "estimate sequence consistent over {} iterations, max relative error {:.3e}",
        report.iterations, report.max_rel_error
    );
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    against: &'static str,
    inputs: BoundInputs,
    k: usize,
    /// New bound at `k` (`b`).
    new_bound: f64,
    /// Earlier bound at `k` (`a`).
    earlier_bound: f64,
    /// `b / a`, computed from logarithms.
    ratio: f64,
    ln_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_new: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_earlier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_new: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_earlier: Option<f64>,
}

fn compare(a: CompareArgs) -> CliResult<()> {
    check_out(&a.out)?;
    let inputs = bound_inputs(&a.inputs)?;
    let k = a.kmax as f64;
    let cmp = match a.against {
        Against::Rt => {
            let (b, e) = (rbcd_bound_general(&inputs, k), rt_expected(&inputs, k));
            let strong = inputs.mu_sum() > 0.0;
            let has_eps = inputs.eps.is_some() && inputs.rho.is_some();
            Comparison {
                against: "rt",
                inputs: inputs.clone(),
                k: a.kmax,
                new_bound: b,
                earlier_bound: e,
                ratio: b / e,
                ln_ratio: b.ln() - e.ln(),
                factor_new: strong
                    .then(|| strong_factor(inputs.mu_f, inputs.mu_psi, inputs.n))
                    .transpose()?,
                factor_earlier: strong
                    .then(|| rt_strong_factor(inputs.mu_f, inputs.mu_psi, inputs.n)),
                k_new: if has_eps {
                    Some(rbcd_highprob_k(&inputs)?)
                } else {
                    None
                },
                k_earlier: rt_bounds(&inputs, k).k_bar,
            }
        }
        Against::Nesterov => {
            let (lb, la) = (
                ln_arcd_bound_envelope(&inputs, k),
                ln_nesterov_arcd_bound(&inputs, k),
            );
            Comparison {
                against: "nesterov",
                inputs: inputs.clone(),
                k: a.kmax,
                new_bound: lb.exp(),
                earlier_bound: la.exp(),
                ratio: (lb - la).exp(),
                ln_ratio: lb - la,
                factor_new: None,
                factor_earlier: None,
                k_new: None,
                k_earlier: None,
            }
        }
    };
    emit(
        &a.out,
        &(serde_json::to_string_pretty(&cmp).expect("comparison serializes") + "\n"),
    )?;
    eprintln!("b/a ratio at k = {}: {:.6e}", cmp.k, cmp.ratio);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: cannot configure worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Expect(a) => expect(a),
        Command::Bounds(a) => bounds(a),
        Command::Certify(a) => certify(a),
        Command::CheckEs(a) => check_es(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let code = |e: Error| Failure::from(e).code;
        assert_eq!(code(Error::Invalid("x".into())), 2);
        assert_eq!(code(Error::Domain("x".into())), 2);
        assert_eq!(code(Error::Io("x".into())), 2);
        assert_eq!(
            code(Error::Blowup {
                iteration: 3,
                what: "x".into()
            }),
            3
        );
        assert_eq!(
            code(Error::NoConvergence {
                sweeps: 1,
                residual: 1.0
            }),
            3
        );
        assert_eq!(
            code(Error::Verification {
                iteration: 1,
                what: "x".into()
            }),
            3
        );
        assert_eq!(
            certification_outcome(Theorem::General, Status::Fail)
                .unwrap_err()
                .code,
            4
        );
        assert!(certification_outcome(Theorem::General, Status::BudgetSkipped).is_ok());
        assert!(certification_outcome(Theorem::General, Status::Pass).is_ok());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
