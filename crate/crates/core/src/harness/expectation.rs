//! Monte Carlo estimates of `E[F(x^k)] − F*` over seeded runs.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arcd::{arcd_run_gamma, arcd_run_simple};
use crate::error::{Error, Result};
use crate::mapping::{apply_block, full_mapping};
use crate::problem::Problem;
use crate::rbcd::{rbcd_run, SolverConfig};
use crate::rng::run_seed;
use crate::trace::RunTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Rbcd,
    ArcdGamma { gamma0: f64 },
    ArcdSimple { alpha_prev: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Rbcd => "rbcd",
            Method::ArcdGamma { .. } => "arcd",
            Method::ArcdSimple { .. } => "arcd_simple",
        }
    }
}

/// One run of `method` with the seed in `config`.
pub fn run_method(problem: &Problem, method: Method, config: &SolverConfig) -> Result<RunTrace> {
    match method {
        Method::Rbcd => rbcd_run(problem, config),
        Method::ArcdGamma { gamma0 } => {
            arcd_run_gamma(problem, gamma0, config, false).map(|r| r.trace)
        }
        Method::ArcdSimple { alpha_prev } => arcd_run_simple(problem, alpha_prev, config),
    }
}

/// Attach the failing run's seed to an error.
pub(crate) fn tag_seed(e: Error, seed: u64) -> Error {
    match e {
        Error::Blowup { iteration, what } => Error::Blowup {
            iteration,
            what: format!("run with seed {seed}: {what}"),
        },
        Error::Verification { iteration, what } => Error::Verification {
            iteration,
            what: format!("run with seed {seed}: {what}"),
        },
        Error::NonFiniteBlock { block, what } => Error::NonFiniteBlock {
            block,
            what: format!("run with seed {seed}: {what}"),
        },
        other => other,
    }
}

/// Apply `f` to runs `0..runs` (seed `base + j`) in parallel, keeping run order.
pub(crate) fn map_runs<T, F>(base_seed: u64, runs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..runs)
        .into_par_iter()
        .map(|j| {
            let seed = run_seed(base_seed, j);
            f(seed).map_err(|e| tag_seed(e, seed))
        })
        .collect()
}

/// Per-run gaps `F(x^k) − F*` on a shared grid of record points.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSamples {
    pub ks: Vec<usize>,
    /// `gaps[j][r]` is run `j` at record point `r`.
    pub gaps: Vec<Vec<f64>>,
    pub base_seed: u64,
}

pub fn sample_gaps(
    problem: &Problem,
    method: Method,
    config: &SolverConfig,
    runs: usize,
    f_star: f64,
) -> Result<GapSamples> {
    config.validate()?;
    let traces = map_runs(config.seed, runs, |seed| {
        run_method(
            problem,
            method,
            &SolverConfig {
                seed,
                ..config.clone()
            },
        )
    })?;
    let ks = traces.first().map(|t| t.ks()).unwrap_or_default();
    let gaps = traces
        .iter()
        .map(|t| t.records.iter().map(|r| r.objective - f_star).collect())
        .collect();
    Ok(GapSamples {
        ks,
        gaps,
        base_seed: config.seed,
    })
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub(crate) fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard error of the mean.
    pub(crate) fn se(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let var = (self.m2 / (self.count - 1) as f64).max(0.0);
        (var / self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCurve {
    pub ks: Vec<usize>,
    pub mean_gap: Vec<f64>,
    pub se: Vec<f64>,
    pub runs: usize,
}

impl ExpectationCurve {
    /// Column-wise mean and standard error, accumulated in run order.
    pub fn from_samples(ks: &[usize], samples: &[Vec<f64>]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Invalid(
                "an expectation estimate needs at least 2 runs".into(),
            ));
        }
        let mut acc = vec![Welford::default(); ks.len()];
        for run in samples {
            if run.len() != ks.len() {
                return Err(Error::Dimension(format!(
                    "run has {} records, grid has {}",
                    run.len(),
                    ks.len()
                )));
            }
            for (w, &x) in acc.iter_mut().zip(run) {
                w.push(x);
            }
        }
        Ok(Self {
            ks: ks.to_vec(),
            mean_gap: acc.iter().map(Welford::mean).collect(),
            se: acc.iter().map(Welford::se).collect(),
            runs: samples.len(),
        })
    }

    /// CSV with header `k,mean_gap,se,runs`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mean_gap,se,runs\n");
        for ((k, m), s) in self.ks.iter().zip(&self.mean_gap).zip(&self.se) {
            let _ = writeln!(out, "{k},{m:.16e},{s:.16e},{}", self.runs);
        }
        out
    }
}

/// Mean gap and standard error at every record point over `runs` seeded runs.
pub fn estimate_expectation(
    problem: &Problem,
    method: Method,
    config: &SolverConfig,
    runs: usize,
    f_star: f64,
) -> Result<ExpectationCurve> {
    if runs < 2 {
        return Err(Error::Invalid(
            "an expectation estimate needs at least 2 runs".into(),
        ));
    }
    let samples = sample_gaps(problem, method, config, runs, f_star)?;
    ExpectationCurve::from_samples(&samples.ks, &samples.gaps)
}

/// `(1/n) Σ_i F(x + U_i d_i(x))`, the exact expected objective after one
/// RBCD step from `x`.
pub fn exact_one_step_expectation(problem: &Problem, x: &[f64]) -> Result<f64> {
    let m = full_mapping(problem, x)?;
    let p = problem.partition();
    let total: f64 = (0..p.n_blocks())
        .map(|i| problem.objective(&apply_block(problem, x, i, &m.d[p.range(i)])))
        .sum();
    Ok(total / p.n_blocks() as f64)
}
