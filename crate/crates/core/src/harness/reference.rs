//! Reference minimizers for measuring gaps and distances.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{full_mapping, prox_step_from_grad};
use crate::problem::Problem;

/// Default stationarity target `‖g(x*)‖*_L`.
pub const DEFAULT_TOL: f64 = 1e-11;
/// A reference is accepted only below this residual.
pub const ACCEPT_TOL: f64 = 1e-9;
/// Cap on cyclic sweeps.
pub const MAX_SWEEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMethod {
    /// Linear optimality system solved directly.
    Analytic,
    /// Iterated block proximal sweeps.
    Refined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// `‖x^0 − x*‖_L`. Exact when the minimizer is unique, otherwise the
    /// distance to the minimizer found, which can only overstate `R_0`.
    pub r0: f64,
    /// `F(x^0) − F*`.
    pub delta0: f64,
    pub mu_f: f64,
    pub mu_psi: f64,
    pub method: ReferenceMethod,
    /// `‖g(x*)‖*_L`.
    pub residual: f64,
    pub sweeps: usize,
}

impl Reference {
    pub fn unique_minimizer(&self) -> bool {
        self.mu_f + self.mu_psi > 0.0
    }
}

fn direct_solve(problem: &Problem) -> Option<Vec<f64>> {
    let q = problem.smooth().as_quadratic()?;
    let curv = problem.regularizer().quadratic_curvature()?;
    let n = problem.dim();
    let a = q.matrix() + DMatrix::from_diagonal(&DVector::from_vec(curv));
    let x = a
        .clone()
        .cholesky()
        .map(|c| c.solve(q.linear()))
        .or_else(|| {
            // semidefinite systems: least-squares solution through the SVD
            a.svd(true, true).solve(q.linear(), 1e-13).ok()
        })?;
    (x.len() == n && x.iter().all(|v| v.is_finite())).then(|| x.iter().copied().collect())
}

/// Cyclic block proximal sweeps from `x` until `‖g(x)‖*_L ≤ tol`.
fn sweep_solve(
    problem: &Problem,
    mut x: Vec<f64>,
    tol: f64,
    max_sweeps: usize,
) -> Result<(Vec<f64>, f64, usize)> {
    let p = problem.partition();
    let max_block = p.sizes().iter().copied().max().unwrap_or(1);
    let (mut grad, mut d) = (vec![0.0; max_block], vec![0.0; max_block]);
    let mut residual = full_mapping(problem, &x)?.g_dual_norm;
    let mut sweeps = 0;
    while residual > tol {
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence { sweeps, residual });
        }
        for i in 0..p.n_blocks() {
            let ni = p.size(i);
            problem.smooth().partial_grad(&x, i, &mut grad[..ni]);
            prox_step_from_grad(problem, &x, i, &grad[..ni], &mut d[..ni])?;
            for (xv, dv) in p.block_mut(&mut x, i).iter_mut().zip(&d[..ni]) {
                *xv += dv;
            }
        }
        sweeps += 1;
        residual = full_mapping(problem, &x)?.g_dual_norm;
    }
    Ok((x, residual, sweeps))
}

/// A minimizer of `F` with its value, `R_0` and `Δ_0`.
///
/// Quadratic `f` with a zero or squared-`ℓ2` regularizer is solved from the
/// linear optimality system; anything else, or a direct solution that misses
/// `tol`, goes through cyclic block proximal sweeps.
pub fn reference_solve(problem: &Problem, tol: f64) -> Result<Reference> {
    reference_solve_capped(problem, tol, MAX_SWEEPS)
}

pub fn reference_solve_capped(problem: &Problem, tol: f64, max_sweeps: usize) -> Result<Reference> {
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (start, method) = match direct_solve(problem) {
        Some(x) => (x, ReferenceMethod::Analytic),
        None => (problem.x0().to_vec(), ReferenceMethod::Refined),
    };
    let (x_star, residual, sweeps) = sweep_solve(problem, start, tol, max_sweeps)?;
    let method = if sweeps > 0 {
        ReferenceMethod::Refined
    } else {
        method
    };
    if residual > ACCEPT_TOL {
        return Err(Error::NoConvergence { sweeps, residual });
    }
    let f_star = problem.objective(&x_star);
    let f0 = problem.objective(problem.x0());
    Ok(Reference {
        r0: problem.metric().dist_sq(problem.x0(), &x_star).sqrt(),
        delta0: f0 - f_star,
        x_star,
        f_star,
        mu_f: problem.mu_f(),
        mu_psi: problem.mu_psi(),
        method,
        residual,
        sweeps,
    })
}
