//! Block partitions of `R^N` and the `L`-weighted norm pair.
//!
//! A partition splits the coordinates `0..N` into `n` contiguous blocks of
//! sizes `N_1..N_n`. Block indices are 0-based throughout the crate. The
//! column selectors `U_i` are never formed; block `i` is simply the index
//! range `offsets[i]..offsets[i + 1]`.
//!
//! Given per-block Lipschitz constants `L_i > 0`, the primal norm is
//! `‖x‖_L = (Σ L_i ‖x_i‖²)^{1/2}` and its dual is
//! `‖g‖*_L = (Σ ‖g_i‖² / L_i)^{1/2}`. Each block carries the plain
//! Euclidean norm.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decomposition of `R^N` into `n` contiguous blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Invalid(
                "a partition needs at least one block".into(),
            ));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Invalid(format!("block {i} has size 0")));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        let mut acc = 0usize;
        for &s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        Ok(Self { sizes, offsets })
    }

    /// `n_blocks` blocks of equal size.
    pub fn uniform(n_blocks: usize, block_size: usize) -> Result<Self> {
        Self::new(vec![block_size; n_blocks])
    }

    /// One block per coordinate.
    pub fn singletons(dim: usize) -> Result<Self> {
        Self::uniform(dim, 1)
    }

    pub fn n_blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Total dimension `N`.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    /// Coordinate range of block `i`. Panics if `i` is out of range.
    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn try_range(&self, i: usize) -> Result<Range<usize>> {
        if i >= self.n_blocks() {
            return Err(Error::Dimension(format!(
                "block index {i} out of range for {} blocks",
                self.n_blocks()
            )));
        }
        Ok(self.range(i))
    }

    /// Read view onto block `i` of a full-length vector.
    pub fn block<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.range(i)]
    }

    /// Write view onto block `i` of a full-length vector.
    pub fn block_mut<'a>(&self, x: &'a mut [f64], i: usize) -> &'a mut [f64] {
        &mut x[self.range(i)]
    }

    /// Index of the block that owns coordinate `j`.
    pub fn block_of(&self, j: usize) -> usize {
        debug_assert!(j < self.dim());
        self.offsets.partition_point(|&o| o <= j) - 1
    }

    pub fn check_len(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{what} has length {}, partition dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for BlockPartition {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<BlockPartition> for Vec<usize> {
    fn from(p: BlockPartition) -> Self {
        p.sizes
    }
}

/// Per-block Lipschitz constants `L_1..L_n`, all positive and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LWeights(Vec<f64>);

impl LWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("no Lipschitz constants given".into()));
        }
        for (i, &l) in values.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Invalid(format!(
                    "Lipschitz constant of block {i} must be positive and finite, got {l}"
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// The constants `1/L_i`.
    pub fn reciprocal(&self) -> LWeights {
        LWeights(self.0.iter().map(|l| 1.0 / l).collect())
    }
}

impl TryFrom<Vec<f64>> for LWeights {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<LWeights> for Vec<f64> {
    fn from(w: LWeights) -> Self {
        w.0
    }
}

/// A partition paired with its weights: the `‖·‖_L` / `‖·‖*_L` norm pair.
///
/// The methods assume correctly sized inputs and panic otherwise; use
/// [`l_norm`] and [`l_dual_norm`] at API boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMetric {
    partition: BlockPartition,
    weights: LWeights,
}

impl BlockMetric {
    pub fn new(partition: BlockPartition, weights: LWeights) -> Result<Self> {
        if partition.n_blocks() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} blocks",
                weights.len(),
                partition.n_blocks()
            )));
        }
        Ok(Self { partition, weights })
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn weights(&self) -> &LWeights {
        &self.weights
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.weighted_sq(x, |l| l)
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.norm_sq(x).sqrt()
    }

    pub fn dual_norm_sq(&self, g: &[f64]) -> f64 {
        self.weighted_sq(g, |l| 1.0 / l)
    }

    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        self.dual_norm_sq(g).sqrt()
    }

    /// `‖x − y‖²_L` without allocating the difference.
    pub fn dist_sq(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.partition.dim());
        assert_eq!(y.len(), self.partition.dim());
        (0..self.partition.n_blocks())
            .map(|i| {
                let r = self.partition.range(i);
                let s: f64 = x[r.clone()]
                    .iter()
                    .zip(&y[r])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                self.weights.get(i) * s
            })
            .sum()
    }

    /// Blockwise scaling `(L_i x_i)_i`, the map that turns `‖·‖_L` into `‖·‖*_L`.
    pub fn scale_primal(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.partition.dim());
        let mut out = x.to_vec();
        for i in 0..self.partition.n_blocks() {
            let l = self.weights.get(i);
            self.partition
                .block_mut(&mut out, i)
                .iter_mut()
                .for_each(|v| *v *= l);
        }
        out
    }

    fn weighted_sq(&self, x: &[f64], w: impl Fn(f64) -> f64) -> f64 {
        assert_eq!(x.len(), self.partition.dim());
        (0..self.partition.n_blocks())
            .map(|i| {
                let b = self.partition.block(x, i);
                w(self.weights.get(i)) * b.iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }
}

/// `‖x‖_L`, with a structural error on mismatched shapes.
pub fn l_norm(partition: &BlockPartition, weights: &LWeights, x: &[f64]) -> Result<f64> {
    partition.check_len(x, "x")?;
    Ok(BlockMetric::new(partition.clone(), weights.clone())?.norm(x))
}

/// `‖g‖*_L`, with a structural error on mismatched shapes.
pub fn l_dual_norm(partition: &BlockPartition, weights: &LWeights, g: &[f64]) -> Result<f64> {
    partition.check_len(g, "g")?;
    Ok(BlockMetric::new(partition.clone(), weights.clone())?.dual_norm(g))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
