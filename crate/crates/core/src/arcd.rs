//! Accelerated randomized coordinate descent for smooth `f` (`Ψ ≡ 0`).
//!
//! Two equivalent parameterizations are provided. The γ-form keeps `γ_k` and
//! `λ_k` explicitly and can track the randomized estimate sequence
//! `φ_k(x) = φ*_k + (γ_k/2)‖x − v^k‖²_L` alongside the run. The simple form
//! carries only `α_{k−1}` and uses the coefficients `θ_k`, `β_k`.

use serde::{Deserialize, Serialize};

use crate::blockspace::dot;
use crate::error::{Error, Result};
use crate::oracles::RegularizerKind;
use crate::problem::Problem;
use crate::rbcd::SolverConfig;
use crate::rng::BlockSampler;
use crate::trace::{is_record_point, ArcdExtras, MethodTag, RunTrace, TraceRecord};

/// Positive root of `α² + ((γ − μ)/n)α − γ = 0`, which lies in `(0, n]`.
///
/// `γ` is `γ_k` in the γ-form and `α_{k−1}²` in the simple form.
pub fn solve_alpha(gamma: f64, mu: f64, n: usize) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!(
            "solve_alpha needs γ > 0, got {gamma}"
        )));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Domain(format!(
            "solve_alpha needs 0 ≤ μ ≤ 1, got {mu}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("solve_alpha needs n ≥ 1".into()));
    }
    let p = (gamma - mu) / n as f64;
    let disc = (p * p + 4.0 * gamma).sqrt();
    // pick the cancellation-free form of the same root
    let alpha = if p > 0.0 {
        2.0 * gamma / (p + disc)
    } else {
        0.5 * (disc - p)
    };
    Ok(alpha.min(n as f64))
}

/// `(α_k)` for `k < iters` and `(γ_k)` for `k ≤ iters`. The schedule does not
/// depend on the sampled blocks.
pub fn alpha_schedule(
    gamma0: f64,
    mu: f64,
    n: usize,
    iters: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut alphas = Vec::with_capacity(iters);
    let mut gammas = Vec::with_capacity(iters + 1);
    let mut gamma = gamma0;
    gammas.push(gamma);
    for _ in 0..iters {
        let alpha = solve_alpha(gamma, mu, n)?;
        let a = alpha / n as f64;
        gamma = (1.0 - a) * gamma + a * mu;
        alphas.push(alpha);
        gammas.push(gamma);
    }
    Ok((alphas, gammas))
}

fn require_smooth(problem: &Problem) -> Result<()> {
    if problem.regularizer().kind() != RegularizerKind::Zero {
        return Err(Error::Invalid(
            "ARCD is defined for unconstrained smooth minimization only; the regularizer must be zero".into(),
        ));
    }
    Ok(())
}

fn check_finite(k: usize, what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|t| t.is_finite()) {
        Ok(())
    } else {
        Err(Error::Blowup {
            iteration: k,
            what: format!("non-finite {what}"),
        })
    }
}

/// Quantities of step `k` needed to replay the estimate sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsStep {
    pub alpha: f64,
    pub block: usize,
    pub y: Vec<f64>,
    pub f_y: f64,
    pub grad_block: Vec<f64>,
}

/// Estimate-sequence state at iteration `k`, with `f(x^k)` for the
/// expectation comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsState {
    pub k: usize,
    pub gamma: f64,
    pub v: Vec<f64>,
    pub phistar: f64,
    pub lambda: f64,
    pub f_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsLog {
    pub gamma0: f64,
    pub mu: f64,
    pub v0: Vec<f64>,
    pub f_v0: f64,
    pub steps: Vec<EsStep>,
    pub states: Vec<EsState>,
}

/// ARCD in the γ-form.
#[derive(Debug, Clone)]
pub struct ArcdGamma<'a> {
    problem: &'a Problem,
    sampler: BlockSampler,
    mu: f64,
    x: Vec<f64>,
    v: Vec<f64>,
    y: Vec<f64>,
    grad: Vec<f64>,
    gamma: f64,
    lambda: f64,
    phistar: Option<f64>,
    k: usize,
    last: Option<(usize, f64)>,
    log: Option<EsLog>,
}

impl<'a> ArcdGamma<'a> {
    /// Start at `x^0 = v^0` with `γ_0 = gamma0`. With `track_es` the
    /// estimate sequence is advanced and logged every iteration.
    pub fn new(problem: &'a Problem, gamma0: f64, seed: u64, track_es: bool) -> Result<Self> {
        require_smooth(problem)?;
        if !(gamma0 > 0.0) || !gamma0.is_finite() {
            return Err(Error::Invalid(format!(
                "γ_0 must be positive and finite, got {gamma0}"
            )));
        }
        let x = problem.x0().to_vec();
        let max_block = problem
            .partition()
            .sizes()
            .iter()
            .copied()
            .max()
            .unwrap_or(1);
        let f0 = problem.smooth().value(&x);
        let log = track_es.then(|| EsLog {
            gamma0,
            mu: problem.mu_f(),
            v0: x.clone(),
            f_v0: f0,
            steps: Vec::new(),
            states: vec![EsState {
                k: 0,
                gamma: gamma0,
                v: x.clone(),
                phistar: f0,
                lambda: 1.0,
                f_x: f0,
            }],
        });
        Ok(Self {
            problem,
            sampler: BlockSampler::new(seed, problem.n_blocks()),
            mu: problem.mu_f(),
            v: x.clone(),
            y: x.clone(),
            x,
            grad: vec![0.0; max_block],
            gamma: gamma0,
            lambda: 1.0,
            phistar: track_es.then_some(f0),
            k: 0,
            last: None,
            log,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// `y^{k−1}`, the point whose partial gradient drove the last step.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn phistar(&self) -> Option<f64> {
        self.phistar
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `(i_{k−1}, α_{k−1})`.
    pub fn last_step(&self) -> Option<(usize, f64)> {
        self.last
    }

    pub fn into_log(self) -> Option<EsLog> {
        self.log
    }

    pub fn step(&mut self) -> Result<()> {
        let problem = self.problem;
        let n = problem.n_blocks();
        let alpha = solve_alpha(self.gamma, self.mu, n)?;
        let a = alpha / n as f64;
        let gamma_next = (1.0 - a) * self.gamma + a * self.mu;

        let wv = a * self.gamma;
        let t = wv / (wv + gamma_next);
        for ((y, &x), &v) in self.y.iter_mut().zip(&self.x).zip(&self.v) {
            *y = x + t * (v - x);
        }

        let i = self.sampler.next_block();
        let p = problem.partition();
        let range = p.range(i);
        let li = problem.lipschitz().get(i);
        let grad = &mut self.grad[..range.len()];
        problem.smooth().partial_grad(&self.y, i, grad);
        check_finite(self.k, "partial gradient at y^k", grad)?;

        if let Some(phistar) = self.phistar {
            let f_y = problem.smooth().value(&self.y);
            let diff: Vec<f64> = self.y.iter().zip(&self.v).map(|(y, v)| y - v).collect();
            let inner = -dot(grad, &diff[range.clone()]);
            let g2 = dot(grad, grad);
            let coupling = alpha * (1.0 - a) * self.gamma / gamma_next;
            let next = (1.0 - a) * phistar + a * f_y - alpha * alpha / (2.0 * gamma_next * li) * g2
                + coupling * (self.mu / (2.0 * n as f64) * problem.metric().norm_sq(&diff) + inner);
            self.phistar = Some(next);
            if let Some(log) = self.log.as_mut() {
                log.steps.push(EsStep {
                    alpha,
                    block: i,
                    y: self.y.clone(),
                    f_y,
                    grad_block: grad.to_vec(),
                });
            }
        }

        self.x.copy_from_slice(&self.y);
        for (x, g) in self.x[range.clone()].iter_mut().zip(grad.iter()) {
            *x -= g / li;
        }
        let c1 = (1.0 - a) * self.gamma / gamma_next;
        let c2 = a * self.mu / gamma_next;
        for (v, &y) in self.v.iter_mut().zip(&self.y) {
            *v = c1 * *v + c2 * y;
        }
        let cg = alpha / (li * gamma_next);
        for (v, g) in self.v[range].iter_mut().zip(grad.iter()) {
            *v -= cg * g;
        }

        self.gamma = gamma_next;
        self.lambda *= 1.0 - a;
        self.k += 1;
        self.last = Some((i, alpha));
        check_finite(self.k, "x^k", &self.x)?;
        check_finite(self.k, "v^k", &self.v)?;

        if let Some(log) = self.log.as_mut() {
            log.states.push(EsState {
                k: self.k,
                gamma: self.gamma,
                v: self.v.clone(),
                phistar: self.phistar.unwrap_or(f64::NAN),
                lambda: self.lambda,
                f_x: problem.smooth().value(&self.x),
            });
        }
        Ok(())
    }
}

/// ARCD in the simple form, driven by `α_{k−1}`.
#[derive(Debug, Clone)]
pub struct ArcdSimple<'a> {
    problem: &'a Problem,
    sampler: BlockSampler,
    mu: f64,
    x: Vec<f64>,
    v: Vec<f64>,
    y: Vec<f64>,
    grad: Vec<f64>,
    alpha_prev: f64,
    lambda: f64,
    k: usize,
    last_block: Option<usize>,
}

impl<'a> ArcdSimple<'a> {
    pub fn new(problem: &'a Problem, alpha_prev: f64, seed: u64) -> Result<Self> {
        require_smooth(problem)?;
        let n = problem.n_blocks() as f64;
        if !(alpha_prev > 0.0 && alpha_prev <= n) {
            return Err(Error::Invalid(format!(
                "α_{{-1}} must lie in (0, {n}], got {alpha_prev}"
            )));
        }
        let x = problem.x0().to_vec();
        let max_block = problem
            .partition()
            .sizes()
            .iter()
            .copied()
            .max()
            .unwrap_or(1);
        Ok(Self {
            problem,
            sampler: BlockSampler::new(seed, problem.n_blocks()),
            mu: problem.mu_f(),
            v: x.clone(),
            y: x.clone(),
            x,
            grad: vec![0.0; max_block],
            alpha_prev,
            lambda: 1.0,
            k: 0,
            last_block: None,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn alpha_prev(&self) -> f64 {
        self.alpha_prev
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn last_block(&self) -> Option<usize> {
        self.last_block
    }

    /// `(θ_k, β_k)` for a given `α_k`. When `n² = μ` (only `n = 1, μ = 1`)
    /// `θ_k` is taken as its limit 1.
    pub fn coefficients(alpha: f64, mu: f64, n: usize) -> (f64, f64) {
        let nf = n as f64;
        let denom = nf * nf - mu;
        let theta = if denom > 0.0 {
            (nf * alpha - mu) / denom
        } else {
            1.0
        };
        (theta, 1.0 - mu / (nf * alpha))
    }

    pub fn step(&mut self) -> Result<()> {
        let problem = self.problem;
        let n = problem.n_blocks();
        let alpha = solve_alpha(self.alpha_prev * self.alpha_prev, self.mu, n)?;
        let (theta, beta) = Self::coefficients(alpha, self.mu, n);
        for ((y, &x), &v) in self.y.iter_mut().zip(&self.x).zip(&self.v) {
            *y = x + theta * (v - x);
        }

        let i = self.sampler.next_block();
        let range = problem.partition().range(i);
        let li = problem.lipschitz().get(i);
        let grad = &mut self.grad[..range.len()];
        problem.smooth().partial_grad(&self.y, i, grad);
        check_finite(self.k, "partial gradient at y^k", grad)?;

        self.x.copy_from_slice(&self.y);
        for (x, g) in self.x[range.clone()].iter_mut().zip(grad.iter()) {
            *x -= g / li;
        }
        for (v, &y) in self.v.iter_mut().zip(&self.y) {
            *v = beta * *v + (1.0 - beta) * y;
        }
        let cg = 1.0 / (alpha * li);
        for (v, g) in self.v[range].iter_mut().zip(grad.iter()) {
            *v -= cg * g;
        }

        self.alpha_prev = alpha;
        self.lambda *= 1.0 - alpha / n as f64;
        self.k += 1;
        self.last_block = Some(i);
        check_finite(self.k, "x^k", &self.x)?;
        check_finite(self.k, "v^k", &self.v)?;
        Ok(())
    }
}

/// A γ-form run: its trace, the `α` sequence, and the estimate-sequence log
/// when tracking was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcdRun {
    pub trace: RunTrace,
    pub alphas: Vec<f64>,
    pub es: Option<EsLog>,
}

fn arcd_record(
    problem: &Problem,
    k: usize,
    x: &[f64],
    block: Option<usize>,
    extras: ArcdExtras,
) -> Result<TraceRecord> {
    let objective = problem.objective(x);
    if !objective.is_finite() {
        return Err(Error::Blowup {
            iteration: k,
            what: format!("F(x^k) = {objective}"),
        });
    }
    Ok(TraceRecord {
        k,
        objective,
        block,
        gdual: None,
        arcd: Some(extras),
    })
}

pub fn arcd_run_gamma(
    problem: &Problem,
    gamma0: f64,
    config: &SolverConfig,
    track_es: bool,
) -> Result<ArcdRun> {
    config.validate()?;
    let mut s = ArcdGamma::new(problem, gamma0, config.seed, track_es)?;
    let extras = |s: &ArcdGamma| ArcdExtras {
        alpha: s.last_step().map(|l| l.1),
        gamma: Some(s.gamma()),
        lambda: Some(s.lambda()),
        phistar: s.phistar(),
    };
    let mut records = vec![arcd_record(problem, 0, s.x(), None, extras(&s))?];
    let mut alphas = Vec::with_capacity(config.max_iters);
    for k in 1..=config.max_iters {
        s.step()?;
        let (block, alpha) = s.last_step().expect("a step was taken");
        alphas.push(alpha);
        if is_record_point(k, config.max_iters, config.record_every) {
            records.push(arcd_record(problem, k, s.x(), Some(block), extras(&s))?);
        }
    }
    let final_point = s.x().to_vec();
    Ok(ArcdRun {
        trace: RunTrace {
            method: MethodTag::ArcdGamma,
            seed: config.seed,
            records,
            final_point,
        },
        alphas,
        es: s.into_log(),
    })
}

pub fn arcd_run_simple(
    problem: &Problem,
    alpha_prev: f64,
    config: &SolverConfig,
) -> Result<RunTrace> {
    config.validate()?;
    let mut s = ArcdSimple::new(problem, alpha_prev, config.seed)?;
    let extras = |s: &ArcdSimple| ArcdExtras {
        alpha: (s.k() > 0).then(|| s.alpha_prev()),
        gamma: Some(s.alpha_prev() * s.alpha_prev()),
        lambda: Some(s.lambda()),
        phistar: None,
    };
    let mut records = vec![arcd_record(problem, 0, s.x(), None, extras(&s))?];
    for k in 1..=config.max_iters {
        s.step()?;
        if is_record_point(k, config.max_iters, config.record_every) {
            records.push(arcd_record(problem, k, s.x(), s.last_block(), extras(&s))?);
        }
    }
    Ok(RunTrace {
        method: MethodTag::ArcdSimple,
        seed: config.seed,
        records,
        final_point: s.x().to_vec(),
    })
}

/// `λ_k = ∏_{j<k}(1 − α_j/n)` for `k = 0..=alphas.len()`.
pub fn replay_lambda(alphas: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(alphas.len() + 1);
    let mut lambda = 1.0;
    out.push(lambda);
    for &a in alphas {
        lambda *= 1.0 - a / n as f64;
        out.push(lambda);
    }
    out
}

/// Outcome of replaying an estimate-sequence log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsCheckReport {
    pub iterations: usize,
    pub probes: usize,
    /// Largest relative gap between the canonical form and the unrolled recursion.
    pub max_rel_error: f64,
    pub tolerance: f64,
    /// First `k` where the canonical form disagrees beyond tolerance.
    pub first_failure: Option<usize>,
    /// Largest `|λ_k − ∏_{j<k}(1 − α_j/n)|`.
    pub lambda_max_error: f64,
    /// First `k` with `λ_k = 0` (boundary `α = n`), after which bounds are trivial.
    pub lambda_zero_at: Option<usize>,
    pub passed: bool,
}

/// Tolerance of the canonical-form comparison.
pub const ES_REL_TOL: f64 = 1e-8;
const LAMBDA_TOL: f64 = 1e-12;

/// Compare `φ*_k + (γ_k/2)‖x − v^k‖²_L` with the value of `φ_k(x)` obtained by
/// unrolling its defining recursion from `φ_0(x) = f(v^0) + (γ_0/2)‖x − v^0‖²_L`,
/// at every probe `x` and every logged `k`.
pub fn estimate_sequence_check(
    problem: &Problem,
    log: &EsLog,
    probes: &[Vec<f64>],
) -> Result<EsCheckReport> {
    let metric = problem.metric();
    let p = problem.partition();
    let n = problem.n_blocks() as f64;
    for x in probes {
        p.check_len(x, "probe")?;
    }
    if log.states.len() != log.steps.len() + 1 {
        return Err(Error::Invalid("estimate-sequence log is incomplete".into()));
    }
    let mut phi: Vec<f64> = probes
        .iter()
        .map(|x| log.f_v0 + 0.5 * log.gamma0 * metric.dist_sq(x, &log.v0))
        .collect();
    let mut max_rel_error = 0.0f64;
    let mut first_failure = None;
    for (k, state) in log.states.iter().enumerate() {
        if k > 0 {
            let step = &log.steps[k - 1];
            let a = step.alpha / n;
            let range = p.range(step.block);
            for (val, x) in phi.iter_mut().zip(probes) {
                let lin: f64 = step
                    .grad_block
                    .iter()
                    .zip(&x[range.clone()])
                    .zip(&step.y[range.clone()])
                    .map(|((g, xi), yi)| g * (xi - yi))
                    .sum();
                let quad = log.mu / (2.0 * n) * metric.dist_sq(x, &step.y);
                *val = (1.0 - a) * *val + step.alpha * (step.f_y / n + lin + quad);
            }
        }
        for (val, x) in phi.iter().zip(probes) {
            let canonical = state.phistar + 0.5 * state.gamma * metric.dist_sq(x, &state.v);
            let scale = val.abs().max(canonical.abs()).max(f64::MIN_POSITIVE);
            let rel = (val - canonical).abs() / scale;
            if !(rel <= ES_REL_TOL) && first_failure.is_none() {
                first_failure = Some(k);
            }
            max_rel_error = max_rel_error.max(if rel.is_nan() { f64::INFINITY } else { rel });
        }
    }
    let alphas: Vec<f64> = log.steps.iter().map(|s| s.alpha).collect();
    let lambdas = replay_lambda(&alphas, problem.n_blocks());
    let lambda_max_error = lambdas
        .iter()
        .zip(&log.states)
        .map(|(l, s)| (l - s.lambda).abs())
        .fold(0.0, f64::max);
    let lambda_zero_at = log.states.iter().position(|s| s.lambda == 0.0);
    Ok(EsCheckReport {
        iterations: log.steps.len(),
        probes: probes.len(),
        max_rel_error,
        tolerance: ES_REL_TOL,
        first_failure,
        lambda_max_error,
        lambda_zero_at,
        passed: first_failure.is_none() && lambda_max_error <= LAMBDA_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockspace::BlockPartition;
    use crate::instances;
    use crate::oracles::{QuadraticOracle, ZeroReg};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256StarStar;
    use std::sync::Arc;

    fn bisect_alpha(gamma: f64, mu: f64, n: usize) -> f64 {
        let h = |a: f64| a * a - (1.0 - a / n as f64) * gamma - a / n as f64 * mu;
        let (mut lo, mut hi) = (0.0f64, n as f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn scalar_quadratic(a: f64, x0: f64) -> Problem {
        let p = BlockPartition::singletons(1).unwrap();
        let q = QuadraticOracle::new(p.clone(), DMatrix::from_element(1, 1, a), DVector::zeros(1))
            .unwrap();
        Problem::new(Arc::new(q), Arc::new(ZeroReg::new(p)), vec![x0]).unwrap()
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(solve_alpha(1.0, 1.0, 1).unwrap(), 1.0);
        let a = solve_alpha(1.0, 0.0, 2).unwrap();
        assert!((a - (17f64.sqrt() - 1.0) / 4.0).abs() < 1e-15);
        assert!((a - bisect_alpha(1.0, 0.0, 2)).abs() < 1e-12);
        assert!(matches!(solve_alpha(0.0, 0.5, 2), Err(Error::Domain(_))));
        assert!(matches!(solve_alpha(-1.0, 0.5, 2), Err(Error::Domain(_))));
        assert!(matches!(solve_alpha(1.0, 1.5, 2), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn alpha_is_the_root(lg in -8.0f64..8.0, mu in 0.0f64..=1.0, n in 1usize..50) {
            let gamma = 10f64.powf(lg);
            let a = solve_alpha(gamma, mu, n).unwrap();
            prop_assert!(a > 0.0 && a <= n as f64);
            let resid = a * a - (1.0 - a / n as f64) * gamma - a / n as f64 * mu;
            prop_assert!(resid.abs() <= 1e-12 * gamma.max(1.0));
            prop_assert!((a - bisect_alpha(gamma, mu, n)).abs() <= 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn rejects_regularized_problems() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(1);
        let p = instances::random_quadratic_l1(&mut rng, &[2, 2], 0.1);
        let err = ArcdGamma::new(&p, 1.0, 0, false).unwrap_err();
        assert!(err
            .to_string()
            .contains("unconstrained smooth minimization"));
        assert!(ArcdSimple::new(&p, 1.0, 0).is_err());
        let q = instances::random_quadratic_zero(&mut rng, &[2, 2]);
        assert!(ArcdGamma::new(&q, 0.0, 0, false).is_err());
        assert!(ArcdSimple::new(&q, 2.5, 0).is_err());
    }

    #[test]
    fn first_extrapolation_is_x0() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(2);
        let p = instances::random_quadratic_zero(&mut rng, &[3, 2]);
        for gamma0 in [1e-3, 1.0, 50.0] {
            let mut s = ArcdGamma::new(&p, gamma0, 4, false).unwrap();
            s.step().unwrap();
            assert_eq!(s.y(), p.x0());
        }
    }

    #[test]
    fn gamma_decreases_without_strong_convexity() {
        let (alphas, gammas) = alpha_schedule(1.0, 0.0, 2, 300).unwrap();
        assert!(gammas.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
        for (a, g) in alphas.iter().zip(&gammas[1..]) {
            assert!((a * a - g).abs() <= 1e-12 * g.max(1.0));
        }
    }

    #[test]
    fn simple_form_coefficients() {
        let (theta, beta) = ArcdSimple::coefficients(0.7, 0.0, 3);
        assert!((theta - 0.7 / 3.0).abs() < 1e-15);
        assert_eq!(beta, 1.0);
        let (theta, beta) = ArcdSimple::coefficients(1.0, 1.0, 1);
        assert_eq!((theta, beta), (1.0, 0.0));
        // n = 1, μ = 0, α_{−1} = 1: θ_k = α_k, inside (0, 1)
        let mut ap = 1.0f64;
        for _ in 0..50 {
            let a = solve_alpha(ap * ap, 0.0, 1).unwrap();
            let (theta, _) = ArcdSimple::coefficients(a, 0.0, 1);
            assert_eq!(theta, a);
            assert!(theta > 0.0 && theta < 1.0);
            ap = a;
        }
    }

    #[test]
    fn forms_agree() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(3);
        let p = instances::random_quadratic_zero(&mut rng, &[2, 3, 1, 2]);
        for gamma0 in [0.3, 1.0, 4.0] {
            let mut g = ArcdGamma::new(&p, gamma0, 11, false).unwrap();
            let mut s = ArcdSimple::new(&p, gamma0.sqrt(), 11).unwrap();
            for _ in 0..200 {
                g.step().unwrap();
                s.step().unwrap();
                let sup = g
                    .x()
                    .iter()
                    .zip(s.x())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(sup <= 1e-10, "sup = {sup}");
                assert!((g.lambda() - s.lambda()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn invariants_along_a_run() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(5);
        let p = instances::random_quadratic_zero(&mut rng, &[2; 4]);
        let mu = p.mu_f();
        assert!(mu > 0.0);
        let run = arcd_run_gamma(&p, 1.0, &SolverConfig::new(300, 9), false).unwrap();
        let n = 4.0f64;
        for (k, r) in run.trace.records.iter().enumerate() {
            let e = r.arcd.unwrap();
            let (gamma, lambda) = (e.gamma.unwrap(), e.lambda.unwrap());
            assert!(gamma >= mu * (1.0 - 1e-12));
            assert!(gamma >= lambda * (1.0 - 1e-12));
            let kf = k as f64;
            let env = (1.0 - mu.sqrt() / n)
                .powf(kf)
                .min((n / (n + kf * 0.5)).powi(2));
            assert!(lambda <= env * (1.0 + 1e-12));
            if let Some(alpha) = e.alpha {
                assert!(alpha >= mu.sqrt() * (1.0 - 1e-12));
                assert!((alpha * alpha - gamma).abs() <= 1e-12 * gamma.max(1.0));
            }
        }
        assert_eq!(
            replay_lambda(&run.alphas, 4).last().copied(),
            run.trace.records.last().unwrap().arcd.unwrap().lambda
        );
    }

    #[test]
    fn single_block_is_deterministic_and_optimal_rate() {
        // f = ½ a x², L = a, μ = 1: one step lands on the minimizer
        let p = scalar_quadratic(2.0, 5.0);
        let run = arcd_run_gamma(&p, 1.0, &SolverConfig::new(3, 0), false).unwrap();
        assert_eq!(run.trace.records[1].objective, 0.0);
        let other = arcd_run_gamma(&p, 1.0, &SolverConfig::new(3, 99), false).unwrap();
        assert_eq!(run.trace.objectives(), other.trace.objectives());
    }

    #[test]
    fn canonical_form_matches_recursion() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(6);
        let p = instances::random_quadratic_zero(&mut rng, &[2, 1, 3]);
        let run = arcd_run_gamma(&p, 1.0, &SolverConfig::new(60, 3), true).unwrap();
        let log = run.es.unwrap();
        let probes: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..6).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let report = estimate_sequence_check(&p, &log, &probes).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.lambda_zero_at, None);

        let mut broken = log.clone();
        broken.states[7].phistar += 1e-3;
        let report = estimate_sequence_check(&p, &broken, &probes).unwrap();
        assert_eq!(report.first_failure, Some(7));
        assert!(!report.passed);
    }

    #[test]
    fn one_dimensional_first_step_by_hand() {
        // f = ½ a x², n = 1, γ_0 = γ, μ = 1
        let (a, x0, gamma) = (3.0, 2.0, 0.5);
        let p = scalar_quadratic(a, x0);
        let run = arcd_run_gamma(&p, gamma, &SolverConfig::new(1, 0), true).unwrap();
        let log = run.es.unwrap();
        let alpha = solve_alpha(gamma, 1.0, 1).unwrap();
        let g1 = (1.0 - alpha) * gamma + alpha;
        // y^0 = x^0, so φ_1(x) = (1−α)(f(x0) + γ/2·a(x−x0)²) + α(f(x0) + a·x0(x−x0) + ½a(x−x0)²)
        let f0 = 0.5 * a * x0 * x0;
        for x in [-1.0, 0.0, 0.7, 4.0] {
            let direct = (1.0 - alpha) * (f0 + 0.5 * gamma * a * (x - x0).powi(2))
                + alpha * (f0 + a * x0 * (x - x0) + 0.5 * a * (x - x0).powi(2));
            let s = &log.states[1];
            let canonical = s.phistar + 0.5 * s.gamma * a * (x - s.v[0]).powi(2);
            assert!((direct - canonical).abs() <= 1e-13 * direct.abs().max(1.0));
        }
        assert!((log.states[1].gamma - g1).abs() < 1e-15);
    }
}
