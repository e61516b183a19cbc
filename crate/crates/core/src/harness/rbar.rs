//! Estimates of the initial level-set radius
//! `R̄_0 = max{‖x − x*‖_L : F(x) ≤ F(x^0)}`.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::reference::Reference;
use crate::problem::Problem;

/// Rays longer than this are treated as leaving a bounded level set never.
const MAX_RADIUS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rbar0Estimate {
    /// Largest level-set distance found along sampled rays; a valid lower
    /// bound (and at least `R_0`). Infinite if some ray never leaves the set.
    pub lower: f64,
    /// `√(2Δ_0/(μ_f+μ_Ψ))`, an upper bound when `F` is strongly convex.
    pub analytic_upper: Option<f64>,
    pub samples: usize,
}

impl Rbar0Estimate {
    /// The value to use for `R̄_0`: the analytic bound when it exists,
    /// otherwise the sampled lower bound.
    pub fn value(&self) -> f64 {
        self.analytic_upper.unwrap_or(self.lower)
    }
}

/// Exit distance of `x* + t·u` from `{F ≤ level}`, by doubling then bisection.
fn ray_exit(problem: &Problem, center: &[f64], dir: &[f64], level: f64, start: f64) -> f64 {
    let at = |t: f64| {
        let x: Vec<f64> = center.iter().zip(dir).map(|(c, d)| c + t * d).collect();
        problem.objective(&x)
    };
    let mut lo = 0.0;
    let mut hi = start.max(1e-8);
    while at(hi) <= level {
        lo = hi;
        hi *= 2.0;
        if hi > MAX_RADIUS {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if at(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sampling lower bound over `samples` random rays from `x*` (seeded), plus
/// the analytic upper bound when `μ_f + μ_Ψ > 0`.
pub fn estimate_rbar0(
    problem: &Problem,
    reference: &Reference,
    samples: usize,
    seed: u64,
) -> Result<Rbar0Estimate> {
    let mu = reference.mu_f + reference.mu_psi;
    let analytic = (mu > 0.0).then(|| (2.0 * reference.delta0.max(0.0) / mu).sqrt());
    if samples == 0 && analytic.is_none() {
        return Err(Error::Domain(
            "Rbar0 unavailable: no strong convexity and sampling disabled".into(),
        ));
    }
    let level = problem.objective(problem.x0());
    let metric = problem.metric();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut lower = reference.r0;
    let scale = reference.r0.max(1e-3);
    for _ in 0..samples {
        let mut dir: Vec<f64> = (0..problem.dim())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let norm = metric.norm(&dir);
        if norm == 0.0 {
            continue;
        }
        dir.iter_mut().for_each(|v| *v /= norm);
        lower = lower.max(ray_exit(problem, &reference.x_star, &dir, level, scale));
        if lower.is_infinite() {
            break;
        }
    }
    Ok(Rbar0Estimate {
        lower,
        analytic_upper: analytic.map(|a| a.max(lower)),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockspace::BlockPartition;
    use crate::harness::reference::{reference_solve, DEFAULT_TOL};
    use crate::oracles::{QuadraticOracle, ZeroReg};
    use nalgebra::{DMatrix, DVector};
    use std::sync::Arc;

    fn quadratic(a: DMatrix<f64>, x0: Vec<f64>) -> Problem {
        let n = a.nrows();
        let p = BlockPartition::singletons(n).unwrap();
        let q = QuadraticOracle::new(p.clone(), a, DVector::zeros(n)).unwrap();
        Problem::new(Arc::new(q), Arc::new(ZeroReg::new(p)), x0).unwrap()
    }

    #[test]
    fn round_level_sets() {
        // A diagonal with singleton blocks: f = ½‖x‖²_L, μ = 1
        let p = quadratic(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 9.0])),
            vec![1.0, -0.5, 0.2],
        );
        let r = reference_solve(&p, DEFAULT_TOL).unwrap();
        let e = estimate_rbar0(&p, &r, 50, 1).unwrap();
        assert!((e.analytic_upper.unwrap() - r.r0).abs() < 1e-12);
        assert!((e.lower - r.r0).abs() < 1e-9);
        assert!(e.value() >= r.r0 - 1e-9);
    }

    #[test]
    fn anisotropic_sampling_approaches_analytic_radius() {
        // off-diagonal coupling makes the level set an ellipse in ‖·‖_L;
        // its largest radius is exactly √(2Δ_0/μ_f) for quadratics
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.5, 1.5, 2.0]);
        let p = quadratic(a, vec![1.0, 0.3]);
        let r = reference_solve(&p, DEFAULT_TOL).unwrap();
        let e = estimate_rbar0(&p, &r, 2000, 7).unwrap();
        let exact = (2.0 * r.delta0 / p.mu_f()).sqrt();
        // independent angular sweep
        let metric = p.metric();
        let sweep = (0..20000)
            .map(|j| {
                let th = j as f64 * std::f64::consts::TAU / 20000.0;
                let mut u = vec![th.cos(), th.sin()];
                let n = metric.norm(&u);
                u.iter_mut().for_each(|v| *v /= n);
                let q = 0.5 * (2.0 * u[0] * u[0] + 3.0 * u[0] * u[1] + 2.0 * u[1] * u[1]);
                (r.delta0 / q).sqrt()
            })
            .fold(0.0, f64::max);
        assert!((sweep - exact).abs() < 1e-6 * exact);
        assert!(e.lower <= exact * (1.0 + 1e-9));
        assert!(e.lower >= 0.95 * exact);
    }

    #[test]
    fn unavailable_without_strong_convexity_or_samples() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = quadratic(a, vec![1.0, 0.0]);
        let r = reference_solve(&p, DEFAULT_TOL).unwrap();
        assert!(estimate_rbar0(&p, &r, 0, 0).is_err());
        // the level set is unbounded along (1, −1); random rays reach far
        let e = estimate_rbar0(&p, &r, 50, 0).unwrap();
        assert!(e.analytic_upper.is_none());
        assert!(e.lower > 3.0 * r.r0);
        let flat = [
            std::f64::consts::FRAC_1_SQRT_2,
            -std::f64::consts::FRAC_1_SQRT_2,
        ];
        assert!(ray_exit(&p, &r.x_star, &flat, p.objective(p.x0()), 1.0).is_infinite());
    }
}
