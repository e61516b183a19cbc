//! Randomized block-coordinate descent.
//!
//! Each iteration draws `i_k` uniformly from the blocks and applies the
//! block proximal step: `x^{k+1} = x^k + U_{i_k} d_{i_k}(x^k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{full_mapping, prox_step_from_grad};
use crate::problem::Problem;
use crate::rng::{run_seed, BlockSampler};
use crate::trace::{is_record_point, MethodTag, RunTrace, TraceRecord};

/// Absolute and relative slack of the per-step descent check.
pub const DESCENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub seed: u64,
    /// Keep every `record_every`-th iterate (and the last one).
    pub record_every: usize,
    /// Check the blockwise sufficient-decrease inequality on every step.
    pub verify_descent: bool,
    /// Compute `‖g(x^k)‖*_L` at record points.
    pub record_gdual: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            seed: 0,
            record_every: 1,
            verify_descent: false,
            record_gdual: false,
        }
    }
}

impl SolverConfig {
    pub fn new(max_iters: usize, seed: u64) -> Self {
        Self {
            max_iters,
            seed,
            ..Self::default()
        }
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn verify(mut self, on: bool) -> Self {
        self.verify_descent = on;
        self
    }

    pub fn with_gdual(mut self, on: bool) -> Self {
        self.record_gdual = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.record_every == 0 {
            return Err(Error::Invalid("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// What one RBCD step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub block: usize,
    /// `L_i ‖d_i(x^k)‖²`.
    pub weighted_step_sq: f64,
}

/// Step-by-step RBCD state over a borrowed problem.
#[derive(Debug, Clone)]
pub struct Rbcd<'a> {
    problem: &'a Problem,
    x: Vec<f64>,
    sampler: BlockSampler,
    grad: Vec<f64>,
    step: Vec<f64>,
    k: usize,
    last_block: Option<usize>,
}

impl<'a> Rbcd<'a> {
    pub fn new(problem: &'a Problem, seed: u64) -> Self {
        let max_block = problem
            .partition()
            .sizes()
            .iter()
            .copied()
            .max()
            .unwrap_or(1);
        Self {
            problem,
            x: problem.x0().to_vec(),
            sampler: BlockSampler::new(seed, problem.n_blocks()),
            grad: vec![0.0; max_block],
            step: vec![0.0; max_block],
            k: 0,
            last_block: None,
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn last_block(&self) -> Option<usize> {
        self.last_block
    }

    /// Advance one iteration with a freshly sampled block.
    pub fn step(&mut self) -> Result<StepInfo> {
        let i = self.sampler.next_block();
        self.step_block(i)
    }

    /// Advance one iteration on a caller-chosen block.
    pub fn step_block(&mut self, i: usize) -> Result<StepInfo> {
        let p = self.problem.partition();
        let ni = p.size(i);
        let (grad, step) = (&mut self.grad[..ni], &mut self.step[..ni]);
        self.problem.smooth().partial_grad(&self.x, i, grad);
        prox_step_from_grad(self.problem, &self.x, i, grad, step).map_err(|e| Error::Blowup {
            iteration: self.k,
            what: e.to_string(),
        })?;
        for (xv, dv) in p.block_mut(&mut self.x, i).iter_mut().zip(step.iter()) {
            *xv += dv;
        }
        let weighted_step_sq =
            self.problem.lipschitz().get(i) * step.iter().map(|v| v * v).sum::<f64>();
        self.k += 1;
        self.last_block = Some(i);
        Ok(StepInfo {
            block: i,
            weighted_step_sq,
        })
    }
}

fn record(
    problem: &Problem,
    k: usize,
    x: &[f64],
    block: Option<usize>,
    gdual: bool,
) -> Result<TraceRecord> {
    let objective = problem.objective(x);
    if !objective.is_finite() {
        return Err(Error::Blowup {
            iteration: k,
            what: format!("F(x^k) = {objective}"),
        });
    }
    let gdual = if gdual {
        Some(full_mapping(problem, x)?.g_dual_norm)
    } else {
        None
    };
    Ok(TraceRecord {
        k,
        objective,
        block,
        gdual,
        arcd: None,
    })
}

/// One seeded RBCD run.
pub fn rbcd_run(problem: &Problem, config: &SolverConfig) -> Result<RunTrace> {
    config.validate()?;
    let mut solver = Rbcd::new(problem, config.seed);
    let mut records = vec![record(problem, 0, solver.x(), None, config.record_gdual)?];
    let coef = 0.5 * (1.0 + problem.mu_psi());
    let mut f_prev = records[0].objective;
    for k in 1..=config.max_iters {
        let info = solver.step()?;
        if config.verify_descent {
            let f_new = problem.objective(solver.x());
            let required = coef * info.weighted_step_sq;
            let tol = DESCENT_TOL * (1.0 + f_prev.abs());
            if !(f_prev - f_new >= required - tol) {
                return Err(Error::Verification {
                    iteration: k,
                    what: format!(
                        "block {}: decrease {:e} below ((1+μ_Ψ)/2)·L_i‖d_i‖² = {:e}",
                        info.block,
                        f_prev - f_new,
                        required
                    ),
                });
            }
            f_prev = f_new;
        }
        if is_record_point(k, config.max_iters, config.record_every) {
            records.push(record(
                problem,
                k,
                solver.x(),
                Some(info.block),
                config.record_gdual,
            )?);
        }
    }
    Ok(RunTrace {
        method: MethodTag::Rbcd,
        seed: config.seed,
        records,
        final_point: solver.x,
    })
}

/// Independent restarts from the same `x^0` and their pointwise best.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRunTrace {
    pub runs: Vec<RunTrace>,
    /// `(k, min_j F(x^k_{(j)}))` at each record point.
    pub best: Vec<(usize, f64)>,
}

/// `runs` RBCD runs with seeds `base_seed + j`.
pub fn rbcd_multi_run(
    problem: &Problem,
    config: &SolverConfig,
    runs: usize,
) -> Result<MultiRunTrace> {
    if runs == 0 {
        return Err(Error::Invalid("multi-run needs at least one run".into()));
    }
    let traces = (0..runs)
        .map(|j| {
            let cfg = SolverConfig {
                seed: run_seed(config.seed, j),
                ..config.clone()
            };
            rbcd_run(problem, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (0..traces[0].records.len())
        .map(|r| {
            let k = traces[0].records[r].k;
            let m = traces
                .iter()
                .map(|t| t.records[r].objective)
                .fold(f64::INFINITY, f64::min);
            (k, m)
        })
        .collect();
    Ok(MultiRunTrace { runs: traces, best })
}
