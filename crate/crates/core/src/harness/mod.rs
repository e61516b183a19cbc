//! Reference solutions, Monte Carlo estimates and bound certification.

pub mod certify;
pub mod expectation;
pub mod rbar;
pub mod reference;

pub use certify::{
    certify, certify_with_reference, es_probes, CertifyParams, CertifyReport, Status, Theorem,
};
pub use expectation::{
    estimate_expectation, exact_one_step_expectation, run_method, sample_gaps, ExpectationCurve,
    GapSamples, Method,
};
pub use rbar::{estimate_rbar0, Rbar0Estimate};
pub use reference::{
    reference_solve, reference_solve_capped, Reference, ReferenceMethod, DEFAULT_TOL,
};
