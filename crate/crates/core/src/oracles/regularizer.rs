use std::fmt::Debug;

use crate::blockspace::{BlockPartition, LWeights};
use crate::error::{Error, Result};

/// Which built-in family a regularizer belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    Zero,
    L1,
    Box,
    SquaredL2,
}

/// Block-separable closed convex `Ψ(x) = Σ Ψ_i(x_i)`, possibly `+∞`-valued.
pub trait Regularizer: Send + Sync + Debug {
    fn partition(&self) -> &BlockPartition;

    fn kind(&self) -> RegularizerKind;

    /// `Ψ_i(x_i)`; may be `+∞`, never `−∞` or NaN.
    fn block_value(&self, i: usize, xi: &[f64]) -> f64;

    /// `Σ_i Ψ_i(x_i)`.
    fn value(&self, x: &[f64]) -> f64 {
        let p = self.partition();
        let mut total = 0.0;
        for i in 0..p.n_blocks() {
            let v = self.block_value(i, p.block(x, i));
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            total += v;
        }
        total
    }

    /// Minimizer `d` of `⟨grad_i, d⟩ + (L_i/2)‖d‖² + Ψ_i(x_i + d)`, written to `out`.
    fn prox_block(&self, i: usize, grad_i: &[f64], xi: &[f64], li: f64, out: &mut [f64]);

    /// Convexity parameter with respect to `‖·‖_L` for the given weights.
    fn mu(&self, weights: &LWeights) -> f64;

    /// Whether `s ∈ ∂Ψ_i(u)` up to an absolute tolerance.
    fn subdiff_contains(&self, i: usize, u: &[f64], s: &[f64], tol: f64) -> bool;

    /// Per-coordinate `c_j` when `Ψ(x) = ½ Σ c_j x_j²`, so the optimality
    /// system stays linear.
    fn quadratic_curvature(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Shrinkage `sign(z_j) · max(|z_j| − λ_j/step, 0)`: the prox of
/// `(1/step) Σ λ_j |·|` at `z`.
pub fn soft_threshold(z: &[f64], lambda: &[f64], step: f64, out: &mut [f64]) {
    debug_assert!(step > 0.0);
    for ((o, &zj), &lj) in out.iter_mut().zip(z).zip(lambda) {
        let t = lj / step;
        *o = if zj > t {
            zj - t
        } else if zj < -t {
            zj + t
        } else {
            0.0
        };
    }
}

/// `Ψ ≡ 0`.
#[derive(Debug, Clone)]
pub struct ZeroReg {
    partition: BlockPartition,
}

impl ZeroReg {
    pub fn new(partition: BlockPartition) -> Self {
        Self { partition }
    }
}

impl Regularizer for ZeroReg {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn kind(&self) -> RegularizerKind {
        RegularizerKind::Zero
    }

    fn block_value(&self, _i: usize, _xi: &[f64]) -> f64 {
        0.0
    }

    fn prox_block(&self, _i: usize, grad_i: &[f64], _xi: &[f64], li: f64, out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(grad_i) {
            *o = -g / li;
        }
    }

    fn mu(&self, _weights: &LWeights) -> f64 {
        0.0
    }

    fn subdiff_contains(&self, _i: usize, _u: &[f64], s: &[f64], tol: f64) -> bool {
        s.iter().all(|v| v.abs() <= tol)
    }

    fn quadratic_curvature(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.partition.dim()])
    }
}

/// Weighted `ℓ1`: `Ψ(x) = Σ_j λ_j |x_j|`.
#[derive(Debug, Clone)]
pub struct L1Reg {
    partition: BlockPartition,
    weights: Vec<f64>,
}

impl L1Reg {
    pub fn new(partition: BlockPartition, weights: Vec<f64>) -> Result<Self> {
        partition.check_len(&weights, "l1 weights")?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Invalid(
                "l1 weights must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { partition, weights })
    }

    pub fn uniform(partition: BlockPartition, lambda: f64) -> Result<Self> {
        let w = vec![lambda; partition.dim()];
        Self::new(partition, w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Regularizer for L1Reg {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn kind(&self) -> RegularizerKind {
        RegularizerKind::L1
    }

    fn block_value(&self, i: usize, xi: &[f64]) -> f64 {
        let w = self.partition.block(&self.weights, i);
        xi.iter().zip(w).map(|(x, l)| l * x.abs()).sum()
    }

    fn prox_block(&self, i: usize, grad_i: &[f64], xi: &[f64], li: f64, out: &mut [f64]) {
        let w = self.partition.block(&self.weights, i);
        for ((o, g), x) in out.iter_mut().zip(grad_i).zip(xi) {
            *o = x - g / li;
        }
        let z = out.to_vec();
        soft_threshold(&z, w, li, out);
        for (o, x) in out.iter_mut().zip(xi) {
            *o -= x;
        }
    }

    fn mu(&self, _weights: &LWeights) -> f64 {
        0.0
    }

    fn subdiff_contains(&self, i: usize, u: &[f64], s: &[f64], tol: f64) -> bool {
        let w = self.partition.block(&self.weights, i);
        u.iter().zip(s).zip(w).all(|((&uj, &sj), &lj)| {
            if uj > 0.0 {
                (sj - lj).abs() <= tol
            } else if uj < 0.0 {
                (sj + lj).abs() <= tol
            } else {
                sj.abs() <= lj + tol
            }
        })
    }
}

/// Indicator of the box `Π_j [lower_j, upper_j]`; bounds may be infinite.
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    partition: BlockPartition,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxIndicator {
    pub fn new(partition: BlockPartition, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        partition.check_len(&lower, "box lower bounds")?;
        partition.check_len(&upper, "box upper bounds")?;
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan()
                || hi.is_nan()
                || lo > hi
                || *lo == f64::INFINITY
                || *hi == f64::NEG_INFINITY
            {
                return Err(Error::Invalid(format!(
                    "empty box interval at coordinate {j}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            partition,
            lower,
            upper,
        })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

impl Regularizer for BoxIndicator {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn kind(&self) -> RegularizerKind {
        RegularizerKind::Box
    }

    fn block_value(&self, i: usize, xi: &[f64]) -> f64 {
        let lo = self.partition.block(&self.lower, i);
        let hi = self.partition.block(&self.upper, i);
        let inside = xi
            .iter()
            .zip(lo.iter().zip(hi))
            .all(|(x, (l, h))| l <= x && x <= h);
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox_block(&self, i: usize, grad_i: &[f64], xi: &[f64], li: f64, out: &mut [f64]) {
        let lo = self.partition.block(&self.lower, i);
        let hi = self.partition.block(&self.upper, i);
        for (j, o) in out.iter_mut().enumerate() {
            let z = xi[j] - grad_i[j] / li;
            *o = z.clamp(lo[j], hi[j]) - xi[j];
        }
    }

    fn mu(&self, _weights: &LWeights) -> f64 {
        0.0
    }

    fn subdiff_contains(&self, i: usize, u: &[f64], s: &[f64], tol: f64) -> bool {
        let lo = self.partition.block(&self.lower, i);
        let hi = self.partition.block(&self.upper, i);
        u.iter().zip(s).enumerate().all(|(j, (&uj, &sj))| {
            if uj < lo[j] || uj > hi[j] {
                return false;
            }
            let at_lo = uj == lo[j];
            let at_hi = uj == hi[j];
            // normal cone of [lo, hi]
            match (at_lo, at_hi) {
                (true, true) => true,
                (true, false) => sj <= tol,
                (false, true) => sj >= -tol,
                (false, false) => sj.abs() <= tol,
            }
        })
    }
}

/// `Ψ_i(x_i) = (σ_i/2)‖x_i‖²` with one `σ_i ≥ 0` per block.
///
/// Its convexity parameter is measured in `‖·‖_L`, so it depends on the
/// smooth part's constants: `μ_Ψ = min_i σ_i / L_i`.
#[derive(Debug, Clone)]
pub struct SquaredL2Reg {
    partition: BlockPartition,
    sigma: Vec<f64>,
}

impl SquaredL2Reg {
    pub fn new(partition: BlockPartition, sigma: Vec<f64>) -> Result<Self> {
        if sigma.len() != partition.n_blocks() {
            return Err(Error::Dimension(format!(
                "{} sigma values for {} blocks",
                sigma.len(),
                partition.n_blocks()
            )));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Invalid(
                "sigma values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { partition, sigma })
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
}

impl Regularizer for SquaredL2Reg {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn kind(&self) -> RegularizerKind {
        RegularizerKind::SquaredL2
    }

    fn block_value(&self, i: usize, xi: &[f64]) -> f64 {
        0.5 * self.sigma[i] * xi.iter().map(|v| v * v).sum::<f64>()
    }

    fn prox_block(&self, i: usize, grad_i: &[f64], xi: &[f64], li: f64, out: &mut [f64]) {
        let s = self.sigma[i];
        for ((o, g), x) in out.iter_mut().zip(grad_i).zip(xi) {
            let z = x - g / li;
            *o = li * z / (li + s) - x;
        }
    }

    fn mu(&self, weights: &LWeights) -> f64 {
        self.sigma
            .iter()
            .enumerate()
            .map(|(i, s)| s / weights.get(i))
            .fold(f64::INFINITY, f64::min)
    }

    fn subdiff_contains(&self, i: usize, u: &[f64], s: &[f64], tol: f64) -> bool {
        let sig = self.sigma[i];
        u.iter().zip(s).all(|(uj, sj)| (sj - sig * uj).abs() <= tol)
    }

    fn quadratic_curvature(&self) -> Option<Vec<f64>> {
        let p = &self.partition;
        Some((0..p.dim()).map(|j| self.sigma[p.block_of(j)]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_cases() {
        let mut out = [0.0; 4];
        soft_threshold(&[2.0, -2.0, 0.3, -0.3], &[1.0; 4], 2.0, &mut out);
        assert_eq!(out, [1.5, -1.5, 0.0, 0.0]);
        soft_threshold(&[2.0, -2.0, 0.3, -0.3], &[0.0; 4], 2.0, &mut out);
        assert_eq!(out, [2.0, -2.0, 0.3, -0.3]);
    }

    #[test]
    fn l1_scalar_prox() {
        // q = 2, L = 4, λ = 1 at x = 1: stationarity 2 + 4d + 1 = 0
        let p = BlockPartition::singletons(1).unwrap();
        let r = L1Reg::uniform(p, 1.0).unwrap();
        let mut d = [0.0];
        r.prox_block(0, &[2.0], &[1.0], 4.0, &mut d);
        assert!((d[0] + 0.75).abs() < 1e-15);
        assert!(r.subdiff_contains(0, &[0.25], &[-2.0 - 4.0 * d[0]], 1e-12));
    }

    #[test]
    fn l1_zero_weight_is_gradient_step() {
        let p = BlockPartition::uniform(1, 2).unwrap();
        let r = L1Reg::uniform(p, 0.0).unwrap();
        let mut d = [0.0; 2];
        r.prox_block(0, &[3.0, -1.0], &[0.5, 0.5], 2.0, &mut d);
        assert_eq!(d, [-1.5, 0.5]);
    }

    #[test]
    fn box_projection() {
        let p = BlockPartition::singletons(1).unwrap();
        let r = BoxIndicator::new(p, vec![0.0], vec![f64::INFINITY]).unwrap();
        let mut d = [1.0];
        r.prox_block(0, &[1.0], &[0.0], 2.0, &mut d);
        assert_eq!(d[0], 0.0);
        assert_eq!(r.value(&[-0.1]), f64::INFINITY);
        assert_eq!(r.value(&[3.0]), 0.0);
        // at the lower bound the normal cone is (−∞, 0]
        assert!(r.subdiff_contains(0, &[0.0], &[-1.0], 0.0));
        assert!(!r.subdiff_contains(0, &[0.0], &[1.0], 0.0));
    }

    #[test]
    fn box_rejects_empty_interval() {
        let p = BlockPartition::singletons(1).unwrap();
        assert!(BoxIndicator::new(p.clone(), vec![1.0], vec![0.0]).is_err());
        assert!(BoxIndicator::new(p, vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn squared_l2_mu_is_l_relative() {
        let p = BlockPartition::uniform(2, 2).unwrap();
        let r = SquaredL2Reg::new(p, vec![1.0, 3.0]).unwrap();
        let w = LWeights::new(vec![2.0, 4.0]).unwrap();
        assert_eq!(r.mu(&w), 0.5);
        let mut d = [0.0; 2];
        // minimizer of ⟨q,d⟩ + (L/2)d² + (σ/2)(x+d)² with q=0, x=1, L=2, σ=1 is u = 2/3
        r.prox_block(0, &[0.0, 0.0], &[1.0, 1.0], 2.0, &mut d);
        assert!((d[0] + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn value_is_block_sum() {
        let p = BlockPartition::new(vec![2, 1, 3]).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0, -1.0, 0.0];
        let regs: Vec<Box<dyn Regularizer>> = vec![
            Box::new(L1Reg::new(p.clone(), vec![1.0, 2.0, 0.5, 1.0, 1.0, 4.0]).unwrap()),
            Box::new(SquaredL2Reg::new(p.clone(), vec![1.0, 2.0, 0.5]).unwrap()),
            Box::new(BoxIndicator::new(p.clone(), vec![-5.0; 6], vec![5.0; 6]).unwrap()),
        ];
        for r in regs {
            let sum: f64 = (0..3).map(|i| r.block_value(i, p.block(&x, i))).sum();
            assert_eq!(r.value(&x), sum);
        }
    }
}
