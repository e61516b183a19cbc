//! Seeded problem generators: random families for property tests and the
//! four bundled fixtures (`lasso-20d`, `box-qp-10d`, `strongly-convex-50d`,
//! `smooth-qp-100d`).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;

use crate::blockspace::BlockPartition;
use crate::oracles::block_lipschitz;
use crate::problem::{Problem, ProblemSpec, RegularizerSpec, SmoothSpec};

pub const BUNDLED: [&str; 4] = [
    "lasso-20d",
    "box-qp-10d",
    "strongly-convex-50d",
    "smooth-qp-100d",
];

/// `BᵀB / rank + shift·I` with a `rank × dim` uniform `B`.
pub fn random_psd<R: Rng>(rng: &mut R, dim: usize, rank: usize, shift: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(rank, dim, |_, _| rng.random_range(-1.0..1.0));
    let a = b.transpose() * &b / rank as f64 + DMatrix::identity(dim, dim) * shift;
    (&a + a.transpose()) * 0.5
}

fn row_major(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len());
    for r in 0..a.nrows() {
        v.extend(a.row(r).iter());
    }
    v
}

fn uniform_vec<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

fn normal_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn quadratic_spec(
    sizes: &[usize],
    a: &DMatrix<f64>,
    b: Vec<f64>,
    reg: RegularizerSpec,
    x0: Vec<f64>,
) -> ProblemSpec {
    ProblemSpec {
        name: None,
        n_blocks: sizes.len(),
        block_sizes: sizes.to_vec(),
        smooth: SmoothSpec::Quadratic {
            matrix: row_major(a),
            vector: b,
        },
        regularizer: reg,
        x0,
    }
}

pub fn random_quadratic_zero_spec<R: Rng>(rng: &mut R, sizes: &[usize]) -> ProblemSpec {
    let dim: usize = sizes.iter().sum();
    let a = random_psd(rng, dim, dim + 2, 0.05);
    let b = uniform_vec(rng, dim, -1.0, 1.0);
    let x0 = uniform_vec(rng, dim, -1.0, 1.0);
    quadratic_spec(sizes, &a, b, RegularizerSpec::Zero, x0)
}

pub fn random_quadratic_l1_spec<R: Rng>(rng: &mut R, sizes: &[usize], lambda: f64) -> ProblemSpec {
    let dim: usize = sizes.iter().sum();
    let a = random_psd(rng, dim, dim.div_ceil(2).max(1), 0.0);
    // b in the range of the singular A keeps F bounded below for any λ
    let b = &a * DVector::from_vec(uniform_vec(rng, dim, -1.0, 1.0));
    let b = b.iter().copied().collect();
    let x0 = uniform_vec(rng, dim, -1.0, 1.0);
    let reg = RegularizerSpec::L1 {
        lambda: Some(lambda),
        weights: None,
    };
    quadratic_spec(sizes, &a, b, reg, x0)
}

pub fn random_box_qp_spec<R: Rng>(rng: &mut R, sizes: &[usize], lo: f64, hi: f64) -> ProblemSpec {
    let dim: usize = sizes.iter().sum();
    let a = random_psd(rng, dim, dim, 0.02);
    let b = uniform_vec(rng, dim, -2.0, 2.0);
    let x0 = uniform_vec(rng, dim, lo, hi);
    let reg = RegularizerSpec::Box {
        lower: vec![Some(lo); dim],
        upper: vec![Some(hi); dim],
    };
    quadratic_spec(sizes, &a, b, reg, x0)
}

pub fn random_lasso_spec<R: Rng>(
    rng: &mut R,
    sizes: &[usize],
    rows: usize,
    lambda_frac: f64,
) -> ProblemSpec {
    let dim: usize = sizes.iter().sum();
    let scale = 1.0 / (rows as f64).sqrt();
    let m = DMatrix::from_fn(rows, dim, |_, _| {
        scale * rng.sample::<f64, _>(StandardNormal)
    });
    let mut truth = vec![0.0; dim];
    for (j, t) in truth.iter_mut().enumerate() {
        if j % 4 == 0 {
            *t = rng.random_range(-2.0..2.0);
        }
    }
    let noise = normal_vec(rng, rows);
    let y = &m * DVector::from_vec(truth) + DVector::from_vec(noise) * 0.1;
    let mty = m.transpose() * &y;
    let lambda = lambda_frac * mty.amax();
    ProblemSpec {
        name: None,
        n_blocks: sizes.len(),
        block_sizes: sizes.to_vec(),
        smooth: SmoothSpec::LeastSquares {
            rows: Some(rows),
            matrix: row_major(&m),
            vector: y.iter().copied().collect(),
        },
        regularizer: RegularizerSpec::L1 {
            lambda: Some(lambda),
            weights: None,
        },
        x0: vec![0.0; dim],
    }
}

/// Quadratic plus `(σ_i/2)‖x_i‖²` with `σ_i = mu_psi · L_i`, so the
/// regularizer's convexity parameter in `‖·‖_L` is exactly `mu_psi`.
pub fn random_squared_l2_spec<R: Rng>(
    rng: &mut R,
    sizes: &[usize],
    rank: usize,
    mu_psi: f64,
) -> ProblemSpec {
    let dim: usize = sizes.iter().sum();
    let a = random_psd(rng, dim, rank, 0.0);
    let partition = BlockPartition::new(sizes.to_vec()).expect("valid sizes");
    let l = block_lipschitz(&a, &partition).expect("positive curvature");
    let sigma = l.as_slice().iter().map(|li| mu_psi * li).collect();
    let b = uniform_vec(rng, dim, -1.0, 1.0);
    let x0 = normal_vec(rng, dim);
    quadratic_spec(sizes, &a, b, RegularizerSpec::SquaredL2 { sigma }, x0)
}

fn build(spec: ProblemSpec) -> Problem {
    Problem::from_spec(&spec).expect("generated problems are valid")
}

pub fn random_quadratic_zero<R: Rng>(rng: &mut R, sizes: &[usize]) -> Problem {
    build(random_quadratic_zero_spec(rng, sizes))
}

pub fn random_quadratic_l1<R: Rng>(rng: &mut R, sizes: &[usize], lambda: f64) -> Problem {
    build(random_quadratic_l1_spec(rng, sizes, lambda))
}

pub fn random_box_qp<R: Rng>(rng: &mut R, sizes: &[usize], lo: f64, hi: f64) -> Problem {
    build(random_box_qp_spec(rng, sizes, lo, hi))
}

pub fn random_lasso<R: Rng>(
    rng: &mut R,
    sizes: &[usize],
    rows: usize,
    lambda_frac: f64,
) -> Problem {
    build(random_lasso_spec(rng, sizes, rows, lambda_frac))
}

pub fn random_squared_l2<R: Rng>(
    rng: &mut R,
    sizes: &[usize],
    rank: usize,
    mu_psi: f64,
) -> Problem {
    build(random_squared_l2_spec(rng, sizes, rank, mu_psi))
}

/// The bundled fixture specs, by name.
pub fn bundled_spec(name: &str) -> Option<ProblemSpec> {
    let mut spec = match name {
        "lasso-20d" => {
            let mut rng = Xoshiro256StarStar::seed_from_u64(20);
            random_lasso_spec(&mut rng, &[2; 10], 30, 0.1)
        }
        "box-qp-10d" => {
            let mut rng = Xoshiro256StarStar::seed_from_u64(10);
            let dim = 10;
            // strongly diagonal, so the level sets are close to round in ‖·‖_L
            let coupling = random_psd(&mut rng, dim, dim, 0.0) * 0.1;
            let diag =
                DMatrix::from_diagonal(&DVector::from_fn(dim, |_, _| rng.random_range(1.0..3.0)));
            let a = diag + coupling;
            let a = (&a + a.transpose()) * 0.5;
            let b = uniform_vec(&mut rng, dim, -3.0, 3.0);
            let reg = RegularizerSpec::Box {
                lower: vec![Some(-0.5); dim],
                upper: vec![Some(0.5); dim],
            };
            quadratic_spec(&[2; 5], &a, b, reg, vec![0.0; dim])
        }
        "strongly-convex-50d" => {
            let mut rng = Xoshiro256StarStar::seed_from_u64(50);
            random_squared_l2_spec(&mut rng, &[5; 10], 20, 0.02)
        }
        "smooth-qp-100d" => {
            let mut rng = Xoshiro256StarStar::seed_from_u64(100);
            let dim = 100;
            let a = random_psd(&mut rng, dim, 2 * dim, 0.05);
            let b = uniform_vec(&mut rng, dim, -1.0, 1.0);
            let x0 = uniform_vec(&mut rng, dim, -1.0, 1.0);
            quadratic_spec(&[5; 20], &a, b, RegularizerSpec::Zero, x0)
        }
        _ => return None,
    };
    spec.name = Some(name.to_string());
    Some(spec)
}

pub fn bundled(name: &str) -> Option<Problem> {
    bundled_spec(name).map(build)
}
