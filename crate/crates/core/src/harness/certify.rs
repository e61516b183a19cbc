//! Statistical certification of the convergence guarantees.
//!
//! Expectation bounds are checked with the one-sided rule
//! `mean − z·SE ≤ bound` at every record point; probability bounds compare
//! an empirical failure fraction with `ρ + 3√(ρ(1−ρ)/M)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::arcd::{alpha_schedule, arcd_run_gamma, estimate_sequence_check, replay_lambda};
use crate::error::{Error, Result};
use crate::harness::expectation::{map_runs, sample_gaps, ExpectationCurve, Method, Welford};
use crate::harness::rbar::estimate_rbar0;
use crate::harness::reference::{reference_solve, Reference, DEFAULT_TOL};
use crate::problem::Problem;
use crate::rates::{
    arcd_bound, arcd_lambda_envelope, rbcd_bound_general, rbcd_bound_strong, rbcd_highprob_k,
    rbcd_highprob_k_strong, rbcd_multirun_k, BoundInputs,
};
use crate::rbcd::{rbcd_run, SolverConfig};
use crate::rng::run_seed;

/// Which guarantee to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Expected gap `≤ (n/(n+k))(½R_0² + Δ_0)`.
    #[serde(rename = "3.1")]
    General,
    /// Expected gap under strong convexity, geometric in `k`.
    #[serde(rename = "3.1-strong")]
    Strong,
    /// `P(gap > ε) ≤ ρ` at `k = ⌈K⌉`.
    #[serde(rename = "3.2")]
    HighProb,
    /// `P(gap > ε) ≤ ρ` at `k = ⌈K̃⌉`.
    #[serde(rename = "3.2-strong")]
    HighProbStrong,
    /// Best of `r` independent runs at `K_underline`.
    #[serde(rename = "3.3")]
    MultiRun,
    /// Accelerated method: expected gap `≤ λ_k(Δ_0 + γ_0R_0²/2)`.
    #[serde(rename = "4.1")]
    Accelerated,
    /// Estimate-sequence canonical form and `E f(x^k) ≤ E φ*_k`.
    #[serde(rename = "es")]
    EstimateSequence,
}

impl Theorem {
    pub const ALL: [Theorem; 7] = [
        Theorem::General,
        Theorem::Strong,
        Theorem::HighProb,
        Theorem::HighProbStrong,
        Theorem::MultiRun,
        Theorem::Accelerated,
        Theorem::EstimateSequence,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Theorem::General => "3.1",
            Theorem::Strong => "3.1-strong",
            Theorem::HighProb => "3.2",
            Theorem::HighProbStrong => "3.2-strong",
            Theorem::MultiRun => "3.3",
            Theorem::Accelerated => "4.1",
            Theorem::EstimateSequence => "es",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.tag() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown theorem {s:?}; expected one of 3.1, 3.1-strong, 3.2, 3.2-strong, 3.3, 4.1, es")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyParams {
    /// Runs `M` for expectation and single-run probability tests.
    pub runs: usize,
    /// Horizon for expectation tests.
    pub iters: usize,
    pub record_every: usize,
    pub seed: u64,
    /// `ε = eps_frac · Δ_0`.
    pub eps_frac: f64,
    pub rho: f64,
    /// Batches `B` for the multi-run test.
    pub batches: usize,
    pub gamma0: f64,
    /// Probe points per iteration for the canonical-form check.
    pub probes: usize,
    pub z: f64,
    /// Rays used to estimate `R̄_0` when no analytic bound exists.
    pub rbar_samples: usize,
    /// Largest iteration count a probability test may require.
    pub budget: usize,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self {
            runs: 400,
            iters: 2000,
            record_every: 20,
            seed: 0,
            eps_frac: 0.1,
            rho: 0.2,
            batches: 200,
            gamma0: 1.0,
            probes: 50,
            z: 3.0,
            rbar_samples: 200,
            budget: 100_000,
        }
    }
}

impl CertifyParams {
    fn validate(&self) -> Result<()> {
        if self.runs < 2 {
            return Err(Error::Invalid("certification needs at least 2 runs".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Invalid("record_every must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Invalid(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if !(self.eps_frac > 0.0) {
            return Err(Error::Invalid("eps_frac must be positive".into()));
        }
        if !(self.z >= 0.0) {
            return Err(Error::Invalid("z must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    BudgetSkipped,
}

/// One record point of an expectation test.
/// `margin = bound + gap_floor − (mean − z·SE)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KVerdict {
    pub k: usize,
    pub mean: f64,
    pub se: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVerdict {
    pub k: usize,
    pub eps: f64,
    pub rho: f64,
    pub failures: usize,
    pub trials: usize,
    pub fraction: f64,
    /// `ρ + 3√(ρ(1−ρ)/trials)`.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsSummary {
    pub max_rel_error: f64,
    pub tolerance: f64,
    /// `(seed, k)` of the first canonical-form mismatch.
    pub first_failure: Option<(u64, usize)>,
    pub lambda_max_error: f64,
    pub lambda_zero_at: Option<usize>,
    pub canonical_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub f_star: f64,
    pub r0: f64,
    pub delta0: f64,
    pub mu_f: f64,
    pub mu_psi: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRange {
    pub base: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub theorem: Theorem,
    pub problem: String,
    pub params: CertifyParams,
    pub reference: ReferenceSummary,
    pub bound_inputs: BoundInputs,
    /// Absolute rounding allowance added to every expectation bound.
    pub gap_floor: f64,
    pub verdicts: Vec<KVerdict>,
    pub probability: Option<ProbabilityVerdict>,
    pub estimate_sequence: Option<EsSummary>,
    /// Whether `λ_k` stayed under its envelope for every `k`.
    pub lambda_envelope_ok: Option<bool>,
    pub worst_margin: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub seeds: SeedRange,
    pub status: Status,
    pub notes: Vec<String>,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One-line summary for logs.
    pub fn summary(&self) -> String {
        let status = match self.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::BudgetSkipped => "budget-skipped",
        };
        format!(
            "{} on {}: {status} (worst margin {:.3e}, M = {})",
            self.theorem, self.problem, self.worst_margin, self.m
        )
    }
}

/// Relative resolution of a measured gap `F(x) − F*`; bounds below
/// `GAP_FLOOR·(1 + |F*|)` cannot be distinguished from rounding.
pub const GAP_FLOOR: f64 = 1e-12;

fn expectation_verdicts(
    curve: &ExpectationCurve,
    z: f64,
    floor: f64,
    bound: impl Fn(usize) -> f64,
) -> Vec<KVerdict> {
    curve
        .ks
        .iter()
        .zip(curve.mean_gap.iter().zip(&curve.se))
        .map(|(&k, (&mean, &se))| {
            let b = bound(k);
            let margin = b + floor - (mean - z * se);
            KVerdict {
                k,
                mean,
                se,
                bound: b,
                margin,
                pass: margin >= 0.0,
            }
        })
        .collect()
}

fn probability_verdict(k: usize, eps: f64, rho: f64, gaps: &[f64]) -> ProbabilityVerdict {
    let trials = gaps.len();
    let failures = gaps.iter().filter(|&&g| g > eps).count();
    let fraction = failures as f64 / trials as f64;
    let threshold = rho + 3.0 * (rho * (1.0 - rho) / trials as f64).sqrt();
    ProbabilityVerdict {
        k,
        eps,
        rho,
        failures,
        trials,
        fraction,
        threshold,
        pass: fraction <= threshold,
    }
}

/// `count` probe points `x* + s·z` with standard normal `z` and
/// `s = max(R_0, 1)/√N`, drawn from a stream derived from `seed`.
pub fn es_probes(reference: &Reference, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let spread = reference.r0.max(1.0) / (reference.x_star.len() as f64).sqrt();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..count)
        .map(|_| {
            reference
                .x_star
                .iter()
                .map(|c| c + spread * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

/// Solve for a reference and certify `theorem` on `problem`.
pub fn certify(
    problem: &Problem,
    theorem: Theorem,
    params: &CertifyParams,
) -> Result<CertifyReport> {
    let reference = reference_solve(problem, DEFAULT_TOL)?;
    certify_with_reference(problem, &reference, theorem, params)
}

pub fn certify_with_reference(
    problem: &Problem,
    reference: &Reference,
    theorem: Theorem,
    params: &CertifyParams,
) -> Result<CertifyReport> {
    params.validate()?;
    let mut inputs = BoundInputs {
        mu_f: reference.mu_f,
        mu_psi: reference.mu_psi,
        gamma0: params.gamma0,
        ..BoundInputs::new(problem.n_blocks(), reference.r0, reference.delta0.max(0.0))
    };
    let mut report = CertifyReport {
        theorem,
        problem: problem.name().to_string(),
        params: params.clone(),
        reference: ReferenceSummary {
            f_star: reference.f_star,
            r0: reference.r0,
            delta0: reference.delta0,
            mu_f: reference.mu_f,
            mu_psi: reference.mu_psi,
            residual: reference.residual,
        },
        bound_inputs: inputs.clone(),
        gap_floor: GAP_FLOOR * (1.0 + reference.f_star.abs()),
        verdicts: Vec::new(),
        probability: None,
        estimate_sequence: None,
        lambda_envelope_ok: None,
        worst_margin: f64::INFINITY,
        m: params.runs,
        seeds: SeedRange {
            base: params.seed,
            count: params.runs,
        },
        status: Status::Pass,
        notes: Vec::new(),
    };
    if !reference.unique_minimizer() {
        report
            .notes
            .push("minimizer may not be unique; R0 is measured to the reference minimizer".into());
    }
    let expect_cfg = SolverConfig::new(params.iters, params.seed).record_every(params.record_every);
    let f_star = reference.f_star;

    match theorem {
        Theorem::General | Theorem::Strong => {
            if theorem == Theorem::Strong && inputs.mu_sum() <= 0.0 {
                return Err(Error::Domain(
                    "mu_f + mu_psi = 0: no strong convexity, use the general bound instead".into(),
                ));
            }
            let s = sample_gaps(problem, Method::Rbcd, &expect_cfg, params.runs, f_star)?;
            let curve = ExpectationCurve::from_samples(&s.ks, &s.gaps)?;
            report.verdicts = expectation_verdicts(&curve, params.z, report.gap_floor, |k| {
                if theorem == Theorem::General {
                    rbcd_bound_general(&inputs, k as f64)
                } else {
                    rbcd_bound_strong(&inputs, k as f64).expect("strong convexity checked")
                }
            });
        }
        Theorem::HighProb | Theorem::HighProbStrong | Theorem::MultiRun => {
            let eps = params.eps_frac * reference.delta0;
            if !(eps > 0.0) {
                return Err(Error::Domain(
                    "delta0 is zero; the start is already optimal".into(),
                ));
            }
            inputs.eps = Some(eps);
            inputs.rho = Some(params.rho);
            if theorem == Theorem::HighProb {
                let est = estimate_rbar0(problem, reference, params.rbar_samples, params.seed)?;
                if est.analytic_upper.is_none() {
                    report
                        .notes
                        .push("Rbar0 is a sampled lower bound, so c may be underestimated".into());
                }
                inputs.rbar0 = Some(est.value().max(reference.r0));
                if inputs.tau() < params.rho {
                    report.notes.push(format!(
                        "tau = {:.4} is below rho = {}; K is then not guaranteed to give the stated probability",
                        inputs.tau(),
                        params.rho
                    ));
                }
            }
            let (k_real, runs_per_trial) = match theorem {
                Theorem::HighProb => (rbcd_highprob_k(&inputs)?, 1),
                Theorem::HighProbStrong => (rbcd_highprob_k_strong(&inputs)?, 1),
                _ => {
                    let m = rbcd_multirun_k(&inputs)?;
                    (m.k_underline, m.r)
                }
            };
            report.bound_inputs = inputs.clone();
            if !(k_real.is_finite()) || k_real.ceil() > params.budget as f64 {
                report.status = Status::BudgetSkipped;
                report.notes.push(format!(
                    "required iterations {k_real:.1} exceed the budget of {}",
                    params.budget
                ));
                report.m = 0;
                report.seeds.count = 0;
                return Ok(report);
            }
            let k = k_real.max(0.0).ceil() as usize;
            let trials = if theorem == Theorem::MultiRun {
                params.batches
            } else {
                params.runs
            };
            let total = trials * runs_per_trial;
            let cfg = SolverConfig::new(k, params.seed).record_every(k.max(1));
            let finals = map_runs(params.seed, total, |seed| {
                rbcd_run(
                    problem,
                    &SolverConfig {
                        seed,
                        ..cfg.clone()
                    },
                )
                .map(|t| t.final_objective() - f_star)
            })?;
            let gaps: Vec<f64> = finals
                .chunks(runs_per_trial)
                .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
                .collect();
            let v = probability_verdict(k, eps, params.rho, &gaps);
            report.worst_margin = v.threshold - v.fraction;
            if !v.pass {
                report.status = Status::Fail;
            }
            report.probability = Some(v);
            report.m = trials;
            report.seeds.count = total;
            if theorem == Theorem::MultiRun {
                report
                    .notes
                    .push(format!("{trials} batches of {runs_per_trial} runs"));
            }
            return Ok(report);
        }
        Theorem::Accelerated => {
            let mu = reference.mu_f;
            let (alphas, _) = alpha_schedule(params.gamma0, mu, problem.n_blocks(), params.iters)?;
            let lambdas = replay_lambda(&alphas, problem.n_blocks());
            let s = sample_gaps(
                problem,
                Method::ArcdGamma {
                    gamma0: params.gamma0,
                },
                &expect_cfg,
                params.runs,
                f_star,
            )?;
            let curve = ExpectationCurve::from_samples(&s.ks, &s.gaps)?;
            report.verdicts = expectation_verdicts(&curve, params.z, report.gap_floor, |k| {
                arcd_bound(&inputs, lambdas[k])
            });
            if params.gamma0 >= mu {
                let ok = lambdas.iter().enumerate().all(|(k, &l)| {
                    l <= arcd_lambda_envelope(mu, params.gamma0, problem.n_blocks(), k as f64)
                        * (1.0 + 1e-12)
                        + 1e-300
                });
                report.lambda_envelope_ok = Some(ok);
                if !ok {
                    report.status = Status::Fail;
                }
            } else {
                report
                    .notes
                    .push("gamma0 < mu: the lambda envelope does not apply".into());
            }
            if let Some(k0) = lambdas.iter().position(|&l| l == 0.0) {
                report.notes.push(format!("lambda reaches 0 at k = {k0}"));
            }
        }
        Theorem::EstimateSequence => {
            let per_run = map_runs(params.seed, params.runs, |seed| {
                let run = arcd_run_gamma(
                    problem,
                    params.gamma0,
                    &SolverConfig::new(params.iters, seed),
                    true,
                )?;
                let log = run.es.expect("tracking requested");
                let probes = es_probes(reference, params.probes, seed);
                let check = estimate_sequence_check(problem, &log, &probes)?;
                let diffs: Vec<(f64, f64)> = log
                    .states
                    .iter()
                    .map(|s| (s.f_x - s.phistar, s.phistar))
                    .collect();
                Ok((seed, check, diffs))
            })?;
            let mut summary = EsSummary {
                max_rel_error: 0.0,
                tolerance: crate::arcd::ES_REL_TOL,
                first_failure: None,
                lambda_max_error: 0.0,
                lambda_zero_at: None,
                canonical_ok: true,
            };
            for (seed, check, _) in &per_run {
                summary.max_rel_error = summary.max_rel_error.max(check.max_rel_error);
                summary.lambda_max_error = summary.lambda_max_error.max(check.lambda_max_error);
                if summary.lambda_zero_at.is_none() {
                    summary.lambda_zero_at = check.lambda_zero_at;
                }
                if !check.passed {
                    summary.canonical_ok = false;
                    if summary.first_failure.is_none() {
                        summary.first_failure = Some((*seed, check.first_failure.unwrap_or(0)));
                    }
                }
            }
            if !summary.canonical_ok {
                report.status = Status::Fail;
            }
            let steps = params.iters + 1;
            let mut diff_acc = vec![Welford::default(); steps];
            let mut phi_acc = vec![Welford::default(); steps];
            for (_, _, diffs) in &per_run {
                for (k, &(d, phi)) in diffs.iter().enumerate() {
                    diff_acc[k].push(d);
                    phi_acc[k].push(phi);
                }
            }
            report.verdicts = (0..steps)
                .map(|k| {
                    let (mean, se) = (diff_acc[k].mean(), diff_acc[k].se());
                    // rounding slack on the φ* scale
                    let bound = 1e-10 * (1.0 + phi_acc[k].mean().abs());
                    let margin = bound - (mean - params.z * se);
                    KVerdict {
                        k,
                        mean,
                        se,
                        bound,
                        margin,
                        pass: margin >= 0.0,
                    }
                })
                .collect();
            report.estimate_sequence = Some(summary);
        }
    }
    report.bound_inputs = inputs;
    report.worst_margin = report
        .verdicts
        .iter()
        .map(|v| v.margin)
        .fold(f64::INFINITY, f64::min);
    if report.verdicts.iter().any(|v| !v.pass) {
        report.status = Status::Fail;
    }
    Ok(report)
}

/// Seeds used by a certification run, in order.
pub fn seeds_of(report: &CertifyReport) -> Vec<u64> {
    (0..report.seeds.count)
        .map(|j| run_seed(report.seeds.base, j))
        .collect()
}
