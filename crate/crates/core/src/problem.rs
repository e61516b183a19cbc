//! Composite problem instances `F = f + Ψ` with a start point, and their
//! JSON file format.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::blockspace::{BlockMetric, BlockPartition, LWeights};
use crate::error::{Error, Result};
use crate::oracles::{
    BoxIndicator, L1Reg, LeastSquaresOracle, QuadraticOracle, Regularizer, RegularizerKind,
    SmoothOracle, SquaredL2Reg, ZeroReg,
};

/// A loaded problem: smooth oracle, regularizer, start point and the derived
/// constants (`L_i`, `μ_f`, `μ_Ψ`).
#[derive(Debug, Clone)]
pub struct Problem {
    name: String,
    smooth: Arc<dyn SmoothOracle>,
    reg: Arc<dyn Regularizer>,
    x0: Vec<f64>,
    metric: BlockMetric,
    mu_psi: f64,
}

impl Problem {
    pub fn new(
        smooth: Arc<dyn SmoothOracle>,
        reg: Arc<dyn Regularizer>,
        x0: Vec<f64>,
    ) -> Result<Self> {
        if smooth.partition() != reg.partition() {
            return Err(Error::Dimension(
                "smooth part and regularizer use different partitions".into(),
            ));
        }
        let partition = smooth.partition().clone();
        partition.check_len(&x0, "x0")?;
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("x0 must be finite".into()));
        }
        let metric = BlockMetric::new(partition, smooth.lipschitz().clone())?;
        let mu_psi = reg.mu(smooth.lipschitz());
        let problem = Self {
            name: String::new(),
            smooth,
            reg,
            x0,
            metric,
            mu_psi,
        };
        let f0 = problem.objective(&problem.x0);
        if !f0.is_finite() {
            return Err(Error::Invalid(format!(
                "F(x0) = {f0}; the start point must lie in the domain of the regularizer"
            )));
        }
        Ok(problem)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smooth(&self) -> &dyn SmoothOracle {
        self.smooth.as_ref()
    }

    pub fn regularizer(&self) -> &dyn Regularizer {
        self.reg.as_ref()
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// Same oracles, different start point.
    pub fn with_x0(&self, x0: Vec<f64>) -> Result<Self> {
        Ok(Self::new(self.smooth.clone(), self.reg.clone(), x0)?.named(self.name.clone()))
    }

    pub fn partition(&self) -> &BlockPartition {
        self.metric.partition()
    }

    pub fn metric(&self) -> &BlockMetric {
        &self.metric
    }

    pub fn lipschitz(&self) -> &LWeights {
        self.metric.weights()
    }

    pub fn n_blocks(&self) -> usize {
        self.partition().n_blocks()
    }

    pub fn dim(&self) -> usize {
        self.partition().dim()
    }

    pub fn mu_f(&self) -> f64 {
        self.smooth.mu()
    }

    pub fn mu_psi(&self) -> f64 {
        self.mu_psi
    }

    /// `F(x) = f(x) + Ψ(x)`, `+∞` outside the domain of `Ψ`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let psi = self.reg.value(x);
        if psi == f64::INFINITY {
            return f64::INFINITY;
        }
        self.smooth.value(x) + psi
    }

    pub fn is_smooth_only(&self) -> bool {
        self.reg.kind() == RegularizerKind::Zero
    }

    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        if spec.block_sizes.len() != spec.n_blocks {
            return Err(Error::Invalid(format!(
                "n_blocks is {} but {} block sizes were given",
                spec.n_blocks,
                spec.block_sizes.len()
            )));
        }
        let partition = BlockPartition::new(spec.block_sizes.clone())?;
        let dim = partition.dim();
        let smooth: Arc<dyn SmoothOracle> = match &spec.smooth {
            SmoothSpec::Quadratic { matrix, vector } => {
                if matrix.len() != dim * dim {
                    return Err(Error::Dimension(format!(
                        "quadratic matrix has {} entries, expected {}",
                        matrix.len(),
                        dim * dim
                    )));
                }
                let a = DMatrix::from_row_slice(dim, dim, matrix);
                let b = DVector::from_column_slice(check_len(vector, dim, "quadratic vector")?);
                Arc::new(QuadraticOracle::new(partition.clone(), a, b)?)
            }
            SmoothSpec::LeastSquares {
                rows,
                matrix,
                vector,
            } => {
                let m = rows.unwrap_or(vector.len());
                if matrix.len() != m * dim {
                    return Err(Error::Dimension(format!(
                        "design matrix has {} entries, expected {m}x{dim}",
                        matrix.len()
                    )));
                }
                let design = DMatrix::from_row_slice(m, dim, matrix);
                let y = DVector::from_column_slice(check_len(vector, m, "least-squares targets")?);
                Arc::new(LeastSquaresOracle::new(partition.clone(), design, y)?)
            }
        };
        let reg: Arc<dyn Regularizer> = match &spec.regularizer {
            RegularizerSpec::Zero => Arc::new(ZeroReg::new(partition.clone())),
            RegularizerSpec::L1 { lambda, weights } => match (lambda, weights) {
                (Some(l), None) => Arc::new(L1Reg::uniform(partition.clone(), *l)?),
                (None, Some(w)) => Arc::new(L1Reg::new(partition.clone(), w.clone())?),
                _ => {
                    return Err(Error::Invalid(
                        "l1 regularizer needs exactly one of `lambda` or `weights`".into(),
                    ))
                }
            },
            RegularizerSpec::Box { lower, upper } => {
                let lo = lower
                    .iter()
                    .map(|v| v.unwrap_or(f64::NEG_INFINITY))
                    .collect();
                let hi = upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
                Arc::new(BoxIndicator::new(partition.clone(), lo, hi)?)
            }
            RegularizerSpec::SquaredL2 { sigma } => {
                Arc::new(SquaredL2Reg::new(partition.clone(), sigma.clone())?)
            }
        };
        let problem = Self::new(smooth, reg, spec.x0.clone())?;
        Ok(problem.named(spec.name.clone().unwrap_or_default()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_spec(&ProblemSpec::load(path)?)
    }
}

fn check_len<'a>(v: &'a [f64], len: usize, what: &str) -> Result<&'a [f64]> {
    if v.len() != len {
        return Err(Error::Dimension(format!(
            "{what} has length {}, expected {len}",
            v.len()
        )));
    }
    Ok(v)
}

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n_blocks: usize,
    pub block_sizes: Vec<usize>,
    pub smooth: SmoothSpec,
    pub regularizer: RegularizerSpec,
    pub x0: Vec<f64>,
}

/// Smooth part; matrices are dense and row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothSpec {
    /// `½xᵀAx − bᵀx`; `matrix` is `A` (N×N), `vector` is `b`.
    Quadratic { matrix: Vec<f64>, vector: Vec<f64> },
    /// `½‖Mx − y‖²`; `matrix` is `M` (rows×N), `vector` is `y`.
    LeastSquares {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rows: Option<usize>,
        matrix: Vec<f64>,
        vector: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizerSpec {
    Zero,
    L1 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// `null` entries are unbounded.
    Box {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
    },
    SquaredL2 {
        sigma: Vec<f64>,
    },
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("problem file: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem spec serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> ProblemSpec {
        ProblemSpec {
            name: Some("tiny".into()),
            n_blocks: 2,
            block_sizes: vec![1, 1],
            smooth: SmoothSpec::Quadratic {
                matrix: vec![2.0, 0.5, 0.5, 1.0],
                vector: vec![1.0, -1.0],
            },
            regularizer: RegularizerSpec::L1 {
                lambda: Some(0.1),
                weights: None,
            },
            x0: vec![0.0, 0.0],
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec = tiny_spec();
        let back = ProblemSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, back);
        let p = Problem::from_spec(&back).unwrap();
        assert_eq!(p.name(), "tiny");
        assert_eq!(p.lipschitz().as_slice(), &[2.0, 1.0]);
        assert_eq!(p.objective(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn rejects_infeasible_start() {
        let mut spec = tiny_spec();
        spec.regularizer = RegularizerSpec::Box {
            lower: vec![Some(1.0), None],
            upper: vec![Some(2.0), None],
        };
        let err = Problem::from_spec(&spec).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)), "{err}");
    }

    #[test]
    fn rejects_schema_problems() {
        let mut spec = tiny_spec();
        spec.n_blocks = 3;
        assert!(Problem::from_spec(&spec).is_err());

        let mut spec = tiny_spec();
        spec.regularizer = RegularizerSpec::L1 {
            lambda: Some(1.0),
            weights: Some(vec![1.0, 1.0]),
        };
        assert!(Problem::from_spec(&spec).is_err());

        assert!(ProblemSpec::from_json(r#"{"n_blocks": 1}"#).is_err());
        let text = tiny_spec()
            .to_json()
            .replace("\"x0\"", "\"bogus\": 1, \"x0\"");
        assert!(ProblemSpec::from_json(&text).is_err());
    }

    #[test]
    fn least_squares_spec() {
        let spec = ProblemSpec {
            name: None,
            n_blocks: 1,
            block_sizes: vec![2],
            smooth: SmoothSpec::LeastSquares {
                rows: None,
                matrix: vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
                vector: vec![1.0, 2.0, 3.0],
            },
            regularizer: RegularizerSpec::Zero,
            x0: vec![0.0, 0.0],
        };
        let p = Problem::from_spec(&spec).unwrap();
        assert_eq!(p.objective(&[0.0, 0.0]), 7.0);
        assert!(p.is_smooth_only());
    }
}
