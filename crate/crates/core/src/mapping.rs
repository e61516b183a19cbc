//! Block proximal steps and the composite gradient mapping.
//!
//! For block `i` at point `x` the step `d_i(x)` minimizes
//! `⟨∇_i f(x), d⟩ + (L_i/2)‖d‖² + Ψ_i(x_i + d)`; the quadratic coefficient
//! is always exactly `L_i`. Stacking the block steps gives `d(x)`, which
//! minimizes the surrogate
//!
//! ```text
//! H(x, d) = f(x) + ⟨∇f(x), d⟩ + ½‖d‖²_L + Ψ(x + d)
//! ```
//!
//! and the composite gradient mapping is `g_i(x) = −L_i d_i(x)`.

use crate::blockspace::dot;
use crate::error::{Error, Result};
use crate::problem::Problem;

/// `d(x)`, `g(x)`, `‖g(x)‖*_L` and `H(x, d(x))` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingResult {
    pub d: Vec<f64>,
    pub g: Vec<f64>,
    pub g_dual_norm: f64,
    pub h_value: f64,
}

/// `d_i(x)` given a precomputed partial gradient `grad_i = ∇_i f(x)`.
pub fn prox_step_from_grad(
    problem: &Problem,
    x: &[f64],
    i: usize,
    grad_i: &[f64],
    out: &mut [f64],
) -> Result<()> {
    if grad_i.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteBlock {
            block: i,
            what: "partial gradient".into(),
        });
    }
    let xi = problem.partition().block(x, i);
    let li = problem.lipschitz().get(i);
    problem.regularizer().prox_block(i, grad_i, xi, li, out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteBlock {
            block: i,
            what: "proximal step".into(),
        });
    }
    Ok(())
}

/// `d_i(x)` for a single block.
pub fn block_prox_step(problem: &Problem, x: &[f64], i: usize) -> Result<Vec<f64>> {
    problem.partition().check_len(x, "x")?;
    problem.partition().try_range(i)?;
    let ni = problem.partition().size(i);
    let mut grad = vec![0.0; ni];
    problem.smooth().partial_grad(x, i, &mut grad);
    let mut d = vec![0.0; ni];
    prox_step_from_grad(problem, x, i, &grad, &mut d)?;
    Ok(d)
}

/// `H(x, d)`; `+∞` when `x + d` leaves the domain of `Ψ`.
pub fn surrogate_h(problem: &Problem, x: &[f64], d: &[f64]) -> f64 {
    let mut grad = vec![0.0; x.len()];
    problem.smooth().gradient(x, &mut grad);
    surrogate_h_with_grad(problem, x, &grad, d)
}

fn surrogate_h_with_grad(problem: &Problem, x: &[f64], grad: &[f64], d: &[f64]) -> f64 {
    let xd: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
    let psi = problem.regularizer().value(&xd);
    if psi == f64::INFINITY {
        return f64::INFINITY;
    }
    problem.smooth().value(x) + dot(grad, d) + 0.5 * problem.metric().norm_sq(d) + psi
}

/// All block steps at `x` together with `g(x)`, its dual norm and `H(x, d(x))`.
pub fn full_mapping(problem: &Problem, x: &[f64]) -> Result<MappingResult> {
    let p = problem.partition();
    p.check_len(x, "x")?;
    let mut grad = vec![0.0; x.len()];
    problem.smooth().gradient(x, &mut grad);
    let mut d = vec![0.0; x.len()];
    for i in 0..p.n_blocks() {
        let r = p.range(i);
        prox_step_from_grad(problem, x, i, &grad[r.clone()], &mut d[r])?;
    }
    let mut g = d.clone();
    for i in 0..p.n_blocks() {
        let l = problem.lipschitz().get(i);
        p.block_mut(&mut g, i).iter_mut().for_each(|v| *v *= -l);
    }
    let g_dual_norm = problem.metric().dual_norm(&g);
    let h_value = surrogate_h_with_grad(problem, x, &grad, &d);
    Ok(MappingResult {
        d,
        g,
        g_dual_norm,
        h_value,
    })
}

/// `x + U_i d_i` as a new vector.
pub fn apply_block(problem: &Problem, x: &[f64], i: usize, di: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for (v, dv) in problem.partition().block_mut(&mut y, i).iter_mut().zip(di) {
        *v += dv;
    }
    y
}
