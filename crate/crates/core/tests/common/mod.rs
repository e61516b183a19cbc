#![allow(dead_code)]

use blockcoord::instances;
use blockcoord::mapping::{block_prox_step, full_mapping, surrogate_h};
use blockcoord::Problem;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;

pub const BOX: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Quadratic,
    QuadraticL1,
    BoxQp,
    Lasso,
    SquaredL2,
}

pub const FAMILIES: [Family; 5] = [
    Family::Quadratic,
    Family::QuadraticL1,
    Family::BoxQp,
    Family::Lasso,
    Family::SquaredL2,
];

pub fn rng(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}

pub fn problem(family: Family, sizes: &[usize], seed: u64) -> Problem {
    let mut r = rng(seed);
    let dim: usize = sizes.iter().sum();
    match family {
        Family::Quadratic => instances::random_quadratic_zero(&mut r, sizes),
        Family::QuadraticL1 => instances::random_quadratic_l1(&mut r, sizes, 0.3),
        Family::BoxQp => instances::random_box_qp(&mut r, sizes, BOX.0, BOX.1),
        Family::Lasso => instances::random_lasso(&mut r, sizes, dim + 3, 0.1),
        Family::SquaredL2 => instances::random_squared_l2(&mut r, sizes, (dim / 2).max(1), 0.1),
    }
}

/// A point in the domain of `Ψ`.
pub fn point<R: Rng>(family: Family, dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| match family {
            Family::BoxQp => rng.random_range(BOX.0..=BOX.1),
            _ => 2.0 * rng.sample::<f64, _>(StandardNormal),
        })
        .collect()
}

pub fn add(x: &[f64], d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + b).collect()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// `x + U_i d_i` computed from the full vector `d`.
pub fn branch(problem: &Problem, x: &[f64], d: &[f64], i: usize) -> Vec<f64> {
    let mut y = x.to_vec();
    let r = problem.partition().range(i);
    y[r.clone()]
        .iter_mut()
        .zip(&d[r])
        .for_each(|(v, dv)| *v += dv);
    y
}

/// `(1/n) Σ_i Φ(x + U_i d_i)` over all `n` branches.
pub fn enumerate<F: Fn(&[f64]) -> f64>(problem: &Problem, x: &[f64], d: &[f64], phi: F) -> f64 {
    let n = problem.n_blocks();
    (0..n).map(|i| phi(&branch(problem, x, d, i))).sum::<f64>() / n as f64
}

pub fn weighted_sq(problem: &Problem, v: &[f64]) -> f64 {
    let p = problem.partition();
    (0..p.n_blocks())
        .map(|i| problem.lipschitz().get(i) * p.block(v, i).iter().map(|a| a * a).sum::<f64>())
        .sum()
}

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Slacks of the exact-enumeration identities and inequalities at `(x, y)`.
/// Each entry is `(name, rhs − lhs)` for an inequality `lhs ≤ rhs`, or
/// `(name, −|residual|)` for an identity, scaled relative to the magnitudes
/// involved so that `≥ −tol` is the pass condition.
pub fn lemma_slacks(problem: &Problem, x: &[f64], y: &[f64]) -> Vec<(&'static str, f64)> {
    let n = problem.n_blocks() as f64;
    let mu_f = problem.mu_f();
    let mu_psi = problem.mu_psi();
    let fx = problem.objective(x);
    let fy = problem.objective(y);
    let scale = 1.0 + fx.abs().max(fy.abs());
    let mut out = Vec::new();

    // block steps assembled independently of the full mapping
    let mut dx = vec![0.0; x.len()];
    for i in 0..problem.n_blocks() {
        let di = block_prox_step(problem, x, i).unwrap();
        dx[problem.partition().range(i)].copy_from_slice(&di);
    }
    let g: Vec<f64> = {
        let p = problem.partition();
        let mut g = dx.clone();
        for i in 0..p.n_blocks() {
            let l = problem.lipschitz().get(i);
            g[p.range(i)].iter_mut().for_each(|v| *v *= -l);
        }
        g
    };
    let g_dual_sq: f64 = {
        let p = problem.partition();
        (0..p.n_blocks())
            .map(|i| p.block(&g, i).iter().map(|a| a * a).sum::<f64>() / problem.lipschitz().get(i))
            .sum()
    };

    // separable Φ = Ψ and Φ = ‖·‖²_L, with arbitrary d = y − x
    let d = sub(y, x);
    for (name, phi) in [
        (
            "norm-inc psi",
            Box::new(|v: &[f64]| problem.regularizer().value(v)) as Box<dyn Fn(&[f64]) -> f64>,
        ),
        (
            "norm-inc L-norm",
            Box::new(|v: &[f64]| weighted_sq(problem, v)),
        ),
    ] {
        let lhs = enumerate(problem, x, &d, &phi);
        let rhs = phi(y) / n + (n - 1.0) / n * phi(x);
        let mag = 1.0 + lhs.abs().max(rhs.abs());
        out.push((name, -(lhs - rhs).abs() / mag));
    }

    // expected descent for arbitrary d
    let e_arb = enumerate(problem, x, &d, |v| problem.objective(v));
    let h_arb = surrogate_h(problem, x, &d);
    out.push((
        "expected-descent",
        ((h_arb - fx) / n - (e_arb - fx)) / scale.max(1.0 + h_arb.abs()),
    ));

    // forward-looking lower bound and its y = x corollary
    let e_step = enumerate(problem, x, &dx, |v| problem.objective(v));
    let xd_y = sub(&add(x, &dx), y);
    let rhs = e_step
        + (inner(&g, &sub(y, x)) + 0.5 * g_dual_sq) / n
        + (0.5 * mu_f * weighted_sq(problem, &sub(x, y))
            + 0.5 * mu_psi * weighted_sq(problem, &xd_y))
            / n;
    let lhs = fy / n + (n - 1.0) / n * fx;
    out.push(("forward-looking", (lhs - rhs) / (scale + rhs.abs())));
    let decrease = fx - e_step;
    out.push((
        "monotone",
        (decrease - (1.0 + mu_psi) / (2.0 * n) * g_dual_sq) / scale,
    ));

    // mapping identities
    let m = full_mapping(problem, x).unwrap();
    let d_sq = weighted_sq(problem, &m.d);
    let gmag = 1.0 + g_dual_sq;
    out.push(("d-norm equals g-dual", -(d_sq - g_dual_sq).abs() / gmag));
    out.push(("g-d inner", -(inner(&m.g, &m.d) + g_dual_sq).abs() / gmag));
    out.push((
        "mapping agrees",
        -m.d.iter()
            .zip(&dx)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
    ));
    out
}
