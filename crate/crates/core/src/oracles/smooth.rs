use std::fmt::Debug;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::blockspace::{BlockPartition, LWeights};
use crate::error::{Error, Result};

/// Largest dimension for which the global convexity parameter is computed.
pub const MAX_MU_DIM: usize = 512;

/// Blocks up to this size get an exact eigen-solve for `L_i`; larger ones
/// use power iteration.
pub const MAX_EXACT_BLOCK: usize = 64;

/// The smooth part `f` of a composite objective.
///
/// Implementors must have block-wise Lipschitz partial gradients with the
/// constants returned by [`SmoothOracle::lipschitz`], and `mu` must be a
/// valid convexity parameter with respect to `‖·‖_L` (so `0 ≤ mu ≤ 1`).
pub trait SmoothOracle: Send + Sync + Debug {
    fn partition(&self) -> &BlockPartition;

    fn value(&self, x: &[f64]) -> f64;

    /// `∇_i f(x)`, written into `out` (length `N_i`).
    fn partial_grad(&self, x: &[f64], i: usize, out: &mut [f64]);

    /// Full gradient assembled block by block.
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let p = self.partition();
        for i in 0..p.n_blocks() {
            let r = p.range(i);
            self.partial_grad(x, i, &mut out[r]);
        }
    }

    fn lipschitz(&self) -> &LWeights;

    fn mu(&self) -> f64;

    /// Quadratic structure, when there is one. Used by direct reference solves.
    fn as_quadratic(&self) -> Option<&QuadraticOracle> {
        None
    }
}

/// `f(x) = ½ xᵀAx − bᵀx + offset` with `A` symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    partition: BlockPartition,
    a: DMatrix<f64>,
    b: DVector<f64>,
    offset: f64,
    lipschitz: LWeights,
    mu: f64,
}

impl QuadraticOracle {
    pub fn new(partition: BlockPartition, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        Self::with_offset(partition, a, b, 0.0)
    }

    pub fn with_offset(
        partition: BlockPartition,
        a: DMatrix<f64>,
        b: DVector<f64>,
        offset: f64,
    ) -> Result<Self> {
        let dim = partition.dim();
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, partition dimension is {dim}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != dim {
            return Err(Error::Dimension(format!(
                "linear term has length {}, expected {dim}",
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::Invalid("quadratic data must be finite".into()));
        }
        check_symmetric(&a)?;
        let lipschitz = block_lipschitz(&a, &partition)?;
        let mu = quadratic_mu(&a, &partition, &lipschitz)?;
        Ok(Self {
            partition,
            a,
            b,
            offset,
            lipschitz,
            mu,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl SmoothOracle for QuadraticOracle {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut quad = 0.0;
        for j in 0..n {
            // A is symmetric, so column j doubles as row j
            let col = self.a.column(j);
            let row_dot: f64 = col.iter().zip(x).map(|(a, v)| a * v).sum();
            quad += x[j] * row_dot;
        }
        let lin: f64 = self.b.iter().zip(x).map(|(b, v)| b * v).sum();
        0.5 * quad - lin + self.offset
    }

    fn partial_grad(&self, x: &[f64], i: usize, out: &mut [f64]) {
        let r = self.partition.range(i);
        for (o, j) in out.iter_mut().zip(r) {
            let col = self.a.column(j);
            *o = col.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - self.b[j];
        }
    }

    fn lipschitz(&self) -> &LWeights {
        &self.lipschitz
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn as_quadratic(&self) -> Option<&QuadraticOracle> {
        Some(self)
    }
}

/// `f(x) = ½‖Mx − y‖²`, backed by the normal-equations quadratic.
#[derive(Debug, Clone)]
pub struct LeastSquaresOracle {
    design: DMatrix<f64>,
    targets: DVector<f64>,
    quad: QuadraticOracle,
}

impl LeastSquaresOracle {
    pub fn new(
        partition: BlockPartition,
        design: DMatrix<f64>,
        targets: DVector<f64>,
    ) -> Result<Self> {
        if design.ncols() != partition.dim() {
            return Err(Error::Dimension(format!(
                "design matrix has {} columns, partition dimension is {}",
                design.ncols(),
                partition.dim()
            )));
        }
        if design.nrows() != targets.len() {
            return Err(Error::Dimension(format!(
                "design matrix has {} rows but {} targets",
                design.nrows(),
                targets.len()
            )));
        }
        let a = design.transpose() * &design;
        // MᵀM is symmetric in exact arithmetic; remove rounding asymmetry
        let a = (&a + a.transpose()) * 0.5;
        let b = design.transpose() * &targets;
        let offset = 0.5 * targets.norm_squared();
        let quad = QuadraticOracle::with_offset(partition, a, b, offset)?;
        Ok(Self {
            design,
            targets,
            quad,
        })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }
}

impl SmoothOracle for LeastSquaresOracle {
    fn partition(&self) -> &BlockPartition {
        self.quad.partition()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for r in 0..self.design.nrows() {
            let row = self.design.row(r);
            let pred: f64 = row.iter().zip(x).map(|(m, v)| m * v).sum();
            let e = pred - self.targets[r];
            s += e * e;
        }
        0.5 * s
    }

    fn partial_grad(&self, x: &[f64], i: usize, out: &mut [f64]) {
        self.quad.partial_grad(x, i, out)
    }

    fn lipschitz(&self) -> &LWeights {
        self.quad.lipschitz()
    }

    fn mu(&self) -> f64 {
        self.quad.mu()
    }

    fn as_quadratic(&self) -> Option<&QuadraticOracle> {
        Some(&self.quad)
    }
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let scale = a.amax().max(1.0);
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Invalid(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// `L_i = λ_max(A_ii)` for every diagonal block.
pub fn block_lipschitz(a: &DMatrix<f64>, partition: &BlockPartition) -> Result<LWeights> {
    let mut l = Vec::with_capacity(partition.n_blocks());
    for i in 0..partition.n_blocks() {
        let r = partition.range(i);
        let block = a.view((r.start, r.start), (r.len(), r.len())).into_owned();
        let top = if r.len() <= MAX_EXACT_BLOCK {
            SymmetricEigen::new(block).eigenvalues.max()
        } else {
            power_iteration(&block, 1e-10)
        };
        if !(top > 0.0) {
            return Err(Error::Invalid(format!(
                "diagonal block {i} has no positive curvature (λ_max = {top}); L_{i} must be positive"
            )));
        }
        l.push(top);
    }
    LWeights::new(l)
}

fn power_iteration(m: &DMatrix<f64>, rel_tol: f64) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let w = m * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= rel_tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Convexity parameter of `½xᵀAx` with respect to `‖·‖_L`:
/// `λ_min(D^{-1/2} A D^{-1/2})` with `D = blockdiag(L_i I)`, clamped to `[0, 1]`.
pub fn quadratic_mu(
    a: &DMatrix<f64>,
    partition: &BlockPartition,
    weights: &LWeights,
) -> Result<f64> {
    let dim = partition.dim();
    if a.nrows() != dim || a.ncols() != dim || weights.len() != partition.n_blocks() {
        return Err(Error::Dimension(
            "matrix, partition and weights disagree".into(),
        ));
    }
    if dim > MAX_MU_DIM {
        return Err(Error::Invalid(format!(
            "convexity parameter needs a dense eigen-solve; dimension {dim} exceeds {MAX_MU_DIM}"
        )));
    }
    check_symmetric(a)?;
    let mut scale = vec![0.0; dim];
    for i in 0..partition.n_blocks() {
        let s = 1.0 / weights.get(i).sqrt();
        partition.block_mut(&mut scale, i).fill(s);
    }
    let scaled = DMatrix::from_fn(dim, dim, |r, c| scale[r] * a[(r, c)] * scale[c]);
    let scaled = (&scaled + scaled.transpose()) * 0.5;
    let min = SymmetricEigen::new(scaled).eigenvalues.min();
    Ok(min.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockspace::dot;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256StarStar;

    fn rand_spd(rng: &mut impl Rng, n: usize, shift: f64) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        b.transpose() * &b + DMatrix::identity(n, n) * shift
    }

    #[test]
    fn mu_examples() {
        let p = BlockPartition::singletons(3).unwrap();
        let mu = quadratic_mu(&DMatrix::identity(3, 3), &p, &LWeights::ones(3)).unwrap();
        assert!((mu - 1.0).abs() < 1e-15);

        let p = BlockPartition::singletons(2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let q = QuadraticOracle::new(p.clone(), a, DVector::zeros(2)).unwrap();
        assert_eq!(q.lipschitz().as_slice(), &[1.0, 4.0]);
        assert!((q.mu() - 1.0).abs() < 1e-15);

        // scaled matrix A/2 has eigenvalues 1/2 and 3/2
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let w = LWeights::new(vec![2.0, 2.0]).unwrap();
        let mu = quadratic_mu(&a, &p, &w).unwrap();
        assert!((mu - 0.5).abs() < 1e-14);
    }

    #[test]
    fn mu_rejects_asymmetric_and_large() {
        let p = BlockPartition::singletons(2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(quadratic_mu(&a, &p, &LWeights::ones(2)).is_err());
        assert!(QuadraticOracle::new(p, a, DVector::zeros(2)).is_err());

        let big = BlockPartition::uniform(1, MAX_MU_DIM + 1).unwrap();
        let a = DMatrix::identity(MAX_MU_DIM + 1, MAX_MU_DIM + 1);
        assert!(quadratic_mu(&a, &big, &LWeights::ones(1)).is_err());
    }

    #[test]
    fn power_iteration_agrees_with_eigen() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(3);
        let m = rand_spd(&mut rng, 10, 0.1);
        let exact = SymmetricEigen::new(m.clone()).eigenvalues.max();
        let approx = power_iteration(&m, 1e-12);
        assert!((exact - approx).abs() <= 1e-8 * exact);
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(11);
        let p = BlockPartition::uniform(3, 2).unwrap();
        let m = DMatrix::from_fn(8, 6, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let ls = LeastSquaresOracle::new(p.clone(), m.clone(), y.clone()).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let q = ls.as_quadratic().unwrap();
        assert!((ls.value(&x) - q.value(&x)).abs() < 1e-12 * ls.value(&x).max(1.0));
        for i in 0..3 {
            let cols = m.columns(2 * i, 2).into_owned();
            let l = SymmetricEigen::new(cols.transpose() * &cols)
                .eigenvalues
                .max();
            assert!((ls.lipschitz().get(i) - l).abs() < 1e-12 * l);
        }
    }

    fn random_oracles(seed: u64) -> Vec<Box<dyn SmoothOracle>> {
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
        let p = BlockPartition::new(vec![2, 3, 1, 2]).unwrap();
        let a = rand_spd(&mut rng, 8, 0.0);
        let b = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let m = DMatrix::from_fn(12, 8, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        vec![
            Box::new(QuadraticOracle::new(p.clone(), a, b).unwrap()),
            Box::new(LeastSquaresOracle::new(p, m, y).unwrap()),
        ]
    }

    #[test]
    fn partial_gradients_match_finite_differences() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(5);
        for oracle in random_oracles(21) {
            let p = oracle.partition().clone();
            for _ in 0..100 {
                let x: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let i = rng.random_range(0..p.n_blocks());
                let mut g = vec![0.0; p.size(i)];
                oracle.partial_grad(&x, i, &mut g);
                let h = 1e-6;
                for (k, j) in p.range(i).enumerate() {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (oracle.value(&xp) - oracle.value(&xm)) / (2.0 * h);
                    let err = (fd - g[k]).abs() / g[k].abs().max(1.0);
                    assert!(err <= 1e-5, "fd {fd} vs grad {}", g[k]);
                }
            }
        }
    }

    #[test]
    fn full_gradient_is_block_assembly() {
        for oracle in random_oracles(8) {
            let p = oracle.partition().clone();
            let x: Vec<f64> = (0..p.dim()).map(|j| (j as f64 * 0.37).sin()).collect();
            let mut full = vec![0.0; p.dim()];
            oracle.gradient(&x, &mut full);
            for i in 0..p.n_blocks() {
                let mut g = vec![0.0; p.size(i)];
                oracle.partial_grad(&x, i, &mut g);
                assert_eq!(&full[p.range(i)], &g[..]);
            }
        }
    }

    #[test]
    fn block_descent_inequality_holds_and_is_tight() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(9);
        for oracle in random_oracles(33) {
            let p = oracle.partition().clone();
            for _ in 0..1000 {
                let x: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
                let i = rng.random_range(0..p.n_blocks());
                let h: Vec<f64> = (0..p.size(i))
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                let mut g = vec![0.0; p.size(i)];
                oracle.partial_grad(&x, i, &mut g);
                let mut xh = x.clone();
                for (k, j) in p.range(i).enumerate() {
                    xh[j] += h[k];
                }
                let l = oracle.lipschitz().get(i);
                let rhs = oracle.value(&x) + dot(&g, &h) + 0.5 * l * dot(&h, &h);
                assert!(oracle.value(&xh) <= rhs + 1e-10 * rhs.abs().max(1.0));
            }

            // along the top eigenvector of A_ii the inequality is an equality,
            // so shrinking L_i by 1% must break it
            let q = oracle.as_quadratic().unwrap();
            let x = vec![0.5; p.dim()];
            let mut violated = 0;
            for i in 0..p.n_blocks() {
                let r = p.range(i);
                let block = q
                    .matrix()
                    .view((r.start, r.start), (r.len(), r.len()))
                    .into_owned();
                let eig = SymmetricEigen::new(block);
                let top = eig.eigenvalues.imax();
                let h: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
                let mut g = vec![0.0; r.len()];
                oracle.partial_grad(&x, i, &mut g);
                let mut xh = x.clone();
                for (k, j) in r.clone().enumerate() {
                    xh[j] += h[k];
                }
                let l = 0.99 * oracle.lipschitz().get(i);
                let rhs = oracle.value(&x) + dot(&g, &h) + 0.5 * l * dot(&h, &h);
                if oracle.value(&xh) > rhs {
                    violated += 1;
                }
            }
            assert_eq!(violated, p.n_blocks());
        }
    }

    #[test]
    fn mu_satisfies_strong_convexity_inequality() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(17);
        let p = BlockPartition::new(vec![2, 2, 1]).unwrap();
        let a = rand_spd(&mut rng, 5, 0.5);
        let b = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        let q = QuadraticOracle::new(p.clone(), a, b).unwrap();
        assert!(q.mu() > 0.0 && q.mu() <= 1.0);
        let metric = crate::blockspace::BlockMetric::new(p.clone(), q.lipschitz().clone()).unwrap();
        for _ in 0..500 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut g = vec![0.0; 5];
            q.gradient(&x, &mut g);
            let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let rhs = q.value(&x) + dot(&g, &diff) + 0.5 * q.mu() * metric.norm_sq(&diff);
            assert!(q.value(&y) >= rhs - 1e-10 * rhs.abs().max(1.0));
        }
    }
}
