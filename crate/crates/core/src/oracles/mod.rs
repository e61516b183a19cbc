//! Smooth oracles `f` and block-separable regularizers `Ψ`.

mod regularizer;
mod smooth;

pub use regularizer::{
    soft_threshold, BoxIndicator, L1Reg, Regularizer, RegularizerKind, SquaredL2Reg, ZeroReg,
};
pub use smooth::{
    block_lipschitz, quadratic_mu, LeastSquaresOracle, QuadraticOracle, SmoothOracle,
    MAX_EXACT_BLOCK, MAX_MU_DIM,
};
