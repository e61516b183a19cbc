//! Closed-form convergence bounds and iteration complexities.
//!
//! All logarithms are natural. Iteration counts are returned as reals; callers
//! take the ceiling when budgeting.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::arcd::replay_lambda;
use crate::error::{Error, Result};

/// Scalar inputs shared by all bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub n: usize,
    #[serde(default)]
    pub mu_f: f64,
    #[serde(default)]
    pub mu_psi: f64,
    /// `‖x^0 − x*‖_L`.
    pub r0: f64,
    /// Level-set radius `R̄_0 ≥ R_0`; defaults to `R_0`.
    #[serde(default)]
    pub rbar0: Option<f64>,
    /// `F(x^0) − F*`.
    pub delta0: f64,
    #[serde(default = "one")]
    pub gamma0: f64,
    /// Overrides `c = max{R̄_0², Δ_0}`.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl BoundInputs {
    pub fn new(n: usize, r0: f64, delta0: f64) -> Self {
        Self {
            n,
            mu_f: 0.0,
            mu_psi: 0.0,
            r0,
            rbar0: None,
            delta0,
            gamma0: 1.0,
            c: None,
            eps: None,
            rho: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.mu_f) {
            return bad(format!("mu_f must lie in [0, 1], got {}", self.mu_f));
        }
        if !(self.mu_psi >= 0.0 && self.mu_psi.is_finite()) {
            return bad(format!("mu_psi must be nonnegative, got {}", self.mu_psi));
        }
        if !(self.r0 >= 0.0 && self.r0.is_finite()) {
            return bad(format!("R0 must be nonnegative, got {}", self.r0));
        }
        if let Some(rb) = self.rbar0 {
            if !(rb >= self.r0 && rb.is_finite()) {
                return bad(format!(
                    "Rbar0 = {rb} must be finite and at least R0 = {}",
                    self.r0
                ));
            }
        }
        if !(self.delta0 >= 0.0 && self.delta0.is_finite()) {
            return bad(format!("delta0 must be nonnegative, got {}", self.delta0));
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return bad(format!("gamma0 must be positive, got {}", self.gamma0));
        }
        if let Some(c) = self.c {
            if !(c >= self.delta0 && c > 0.0 && c.is_finite()) {
                return bad(format!("c = {c} must be positive and at least delta0"));
            }
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho < 1.0) {
                return bad(format!("rho must lie in (0, 1), got {rho}"));
            }
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad(format!("eps must be positive, got {eps}"));
            }
        }
        Ok(())
    }

    pub fn rbar0(&self) -> f64 {
        self.rbar0.unwrap_or(self.r0)
    }

    /// `c = max{R̄_0², Δ_0}` unless given explicitly.
    pub fn c(&self) -> f64 {
        self.c
            .unwrap_or_else(|| self.rbar0().powi(2).max(self.delta0))
    }

    pub fn mu_sum(&self) -> f64 {
        self.mu_f + self.mu_psi
    }

    /// `τ = (R_0² + 2Δ_0)/(4c)`.
    pub fn tau(&self) -> f64 {
        (self.r0 * self.r0 + 2.0 * self.delta0) / (4.0 * self.c())
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    fn eps_rho(&self) -> Result<(f64, f64)> {
        let eps = self
            .eps
            .ok_or_else(|| Error::Domain("eps is required".into()))?;
        let rho = self
            .rho
            .ok_or_else(|| Error::Domain("rho is required".into()))?;
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("rho must lie in (0, 1), got {rho}")));
        }
        Ok((eps, rho))
    }

    fn require_strong(&self) -> Result<f64> {
        let m = self.mu_sum();
        if m > 0.0 {
            Ok(m)
        } else {
            Err(Error::Domain(
                "mu_f + mu_psi = 0: no strong convexity, use the general bound instead".into(),
            ))
        }
    }
}

/// `(n/(n+k))(½R_0² + Δ_0)`.
pub fn rbcd_bound_general(inp: &BoundInputs, k: f64) -> f64 {
    let n = inp.nf();
    n / (n + k) * (0.5 * inp.r0 * inp.r0 + inp.delta0)
}

/// Per-iteration contraction `1 − 2(μ_f+μ_Ψ)/(n(1+μ_f+2μ_Ψ))`.
pub fn strong_factor(mu_f: f64, mu_psi: f64, n: usize) -> Result<f64> {
    let m = mu_f + mu_psi;
    if !(m > 0.0) {
        return Err(Error::Domain(
            "mu_f + mu_psi = 0: no strong convexity, use the general bound instead".into(),
        ));
    }
    Ok(1.0 - 2.0 * m / (n as f64 * (1.0 + mu_f + 2.0 * mu_psi)))
}

/// The earlier contraction `1 − (μ_f+μ_Ψ)/(n(1+μ_Ψ))`.
pub fn rt_strong_factor(mu_f: f64, mu_psi: f64, n: usize) -> f64 {
    1.0 - (mu_f + mu_psi) / (n as f64 * (1.0 + mu_psi))
}

/// `factor^k ((1+μ_Ψ)/2 R_0² + Δ_0)`.
pub fn rbcd_bound_strong(inp: &BoundInputs, k: f64) -> Result<f64> {
    let q = strong_factor(inp.mu_f, inp.mu_psi, inp.n)?;
    let start = 0.5 * (1.0 + inp.mu_psi) * inp.r0 * inp.r0 + inp.delta0;
    Ok(if k == 0.0 { start } else { q.powf(k) * start })
}

/// `K = (2nc/ε)(1 + ln((R_0² + 2Δ_0)/(4cρ))) + 2 − n`.
pub fn rbcd_highprob_k(inp: &BoundInputs) -> Result<f64> {
    let (eps, rho) = inp.eps_rho()?;
    let (n, c) = (inp.nf(), inp.c());
    Ok(2.0 * n * c / eps * (1.0 + (inp.tau() / rho).ln()) + 2.0 - n)
}

/// `K̃ = n(1+μ_f+2μ_Ψ)/(2(μ_f+μ_Ψ)) · ln(((1+μ_Ψ)/2 R_0² + Δ_0)/(ρε))`.
pub fn rbcd_highprob_k_strong(inp: &BoundInputs) -> Result<f64> {
    let (eps, rho) = inp.eps_rho()?;
    let m = inp.require_strong()?;
    let start = 0.5 * (1.0 + inp.mu_psi) * inp.r0 * inp.r0 + inp.delta0;
    Ok(inp.nf() * (1.0 + inp.mu_f + 2.0 * inp.mu_psi) / (2.0 * m) * (start / (rho * eps)).ln())
}

/// `r = ⌈ln(1/ρ)⌉`.
pub fn multirun_count(rho: f64) -> Result<usize> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok((-rho.ln()).ceil().max(1.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiRunK {
    /// `⌈(en/ε)(½R_0² + Δ_0)⌉ − n`, iterations per run.
    pub k_underline: f64,
    pub r: usize,
    /// `(⌈(2en/ε)(R_0² + 2Δ_0)⌉ − n)·r`, total iterations.
    pub k_m: f64,
}

pub fn rbcd_multirun_k(inp: &BoundInputs) -> Result<MultiRunK> {
    let (eps, rho) = inp.eps_rho()?;
    let n = inp.nf();
    let r = multirun_count(rho)?;
    let s = 0.5 * inp.r0 * inp.r0 + inp.delta0;
    let k_underline = (E * n * s / eps).ceil() - n;
    let k_m = ((2.0 * E * n * (inp.r0 * inp.r0 + 2.0 * inp.delta0) / eps).ceil() - n) * r as f64;
    Ok(MultiRunK {
        k_underline,
        r,
        k_m,
    })
}

/// Bounds from the earlier analysis that the results above are compared with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtBounds {
    /// `2ncΔ_0/(kΔ_0 + 2nc)`.
    pub expected: f64,
    /// `(2nc/ε)(1 + ln(1/ρ)) + 2 − 2nc/Δ_0`.
    pub k_bar: Option<f64>,
    /// `(n(1+μ_Ψ)/(μ_f+μ_Ψ)) ln(Δ_0/(ρε))`, strongly convex case only.
    pub k_hat: Option<f64>,
    /// `⌈2enc/ε − 2nc/Δ_0⌉·⌈ln(1/ρ)⌉`.
    pub k_bar_m: Option<f64>,
}

pub fn rt_expected(inp: &BoundInputs, k: f64) -> f64 {
    let (n, c, d) = (inp.nf(), inp.c(), inp.delta0);
    2.0 * n * c * d / (k * d + 2.0 * n * c)
}

pub fn rt_bounds(inp: &BoundInputs, k: f64) -> RtBounds {
    let (n, c, d) = (inp.nf(), inp.c(), inp.delta0);
    let expected = rt_expected(inp, k);
    let (k_bar, k_hat, k_bar_m) = match inp.eps_rho() {
        Ok((eps, rho)) => {
            let k_bar = 2.0 * n * c / eps * (1.0 + (1.0 / rho).ln()) + 2.0 - 2.0 * n * c / d;
            let k_hat = inp
                .require_strong()
                .ok()
                .map(|m| n * (1.0 + inp.mu_psi) / m * (d / (rho * eps)).ln());
            let r = multirun_count(rho).unwrap_or(1) as f64;
            let k_bar_m = (2.0 * E * n * c / eps - 2.0 * n * c / d).ceil() * r;
            (Some(k_bar), k_hat, Some(k_bar_m))
        }
        Err(_) => (None, None, None),
    };
    RtBounds {
        expected,
        k_bar,
        k_hat,
        k_bar_m,
    }
}

/// `λ_k` from an `α` sequence.
pub fn arcd_lambda(alphas: &[f64], n: usize) -> Vec<f64> {
    replay_lambda(alphas, n)
}

/// `min{(1 − √μ/n)^k, (n/(n + k√γ_0/2))²}`, valid when `γ_0 ≥ μ`.
pub fn arcd_lambda_envelope(mu: f64, gamma0: f64, n: usize, k: f64) -> f64 {
    ln_arcd_lambda_envelope(mu, gamma0, n, k).exp()
}

/// Natural log of [`arcd_lambda_envelope`]; finite where the value underflows.
pub fn ln_arcd_lambda_envelope(mu: f64, gamma0: f64, n: usize, k: f64) -> f64 {
    let n = n as f64;
    let geometric = if k == 0.0 {
        0.0
    } else {
        k * (-mu.sqrt() / n).ln_1p()
    };
    let sublinear = -2.0 * (k * gamma0.sqrt() / (2.0 * n)).ln_1p();
    geometric.min(sublinear)
}

/// `λ_k (Δ_0 + γ_0R_0²/2)`.
pub fn arcd_bound(inp: &BoundInputs, lambda: f64) -> f64 {
    lambda * (inp.delta0 + 0.5 * inp.gamma0 * inp.r0 * inp.r0)
}

/// `arcd_bound` with `λ_k` replaced by its envelope, using `μ = μ_f`.
pub fn arcd_bound_envelope(inp: &BoundInputs, k: f64) -> f64 {
    ln_arcd_bound_envelope(inp, k).exp()
}

pub fn ln_arcd_bound_envelope(inp: &BoundInputs, k: f64) -> f64 {
    ln_arcd_lambda_envelope(inp.mu_f, inp.gamma0, inp.n, k)
        + (inp.delta0 + 0.5 * inp.gamma0 * inp.r0 * inp.r0).ln()
}

/// The earlier accelerated rate, `a_μ` when `μ_f > 0` and `a_0` otherwise.
pub fn nesterov_arcd_bound(inp: &BoundInputs, k: f64) -> f64 {
    ln_nesterov_arcd_bound(inp, k).exp()
}

/// Natural log of [`nesterov_arcd_bound`].
pub fn ln_nesterov_arcd_bound(inp: &BoundInputs, k: f64) -> f64 {
    let n = inp.nf();
    let base = 2.0 * inp.r0 * inp.r0 + inp.delta0 / (n * n);
    let mu = inp.mu_f;
    if mu > 0.0 {
        // μ·base·[(1+s)^{k+1} − (1−s)^{k+1}]^{−2} with the bracket factored as
        // (1+s)^{k+1}(1 − r^{k+1}), r = (1−s)/(1+s)
        let s = mu.sqrt() / (2.0 * n);
        let m = k + 1.0;
        let log_up = m * s.ln_1p();
        let log_ratio = m * ((-s).ln_1p() - s.ln_1p());
        let log_bracket = log_up + (-log_ratio.exp_m1()).ln();
        mu.ln() + base.ln() - 2.0 * log_bracket
    } else {
        2.0 * (n / (k + 1.0)).ln() + base.ln()
    }
}

/// Linear grid of at most `points + 1` iteration counts from 0 to `kmax`,
/// always containing both ends.
pub fn k_grid(kmax: usize, points: usize) -> Vec<usize> {
    let step = (kmax / points.max(1)).max(1);
    let mut ks: Vec<usize> = (0..=kmax).step_by(step).collect();
    if ks.last() != Some(&kmax) {
        ks.push(kmax);
    }
    ks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub k: usize,
    pub bound_name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "K_tilde")]
    pub k_tilde: Option<f64>,
    #[serde(rename = "K_underline")]
    pub k_underline: Option<f64>,
    pub r: Option<usize>,
    #[serde(rename = "K_M")]
    pub k_m: Option<f64>,
    #[serde(rename = "K_bar")]
    pub k_bar: Option<f64>,
    #[serde(rename = "K_hat")]
    pub k_hat: Option<f64>,
    #[serde(rename = "K_bar_M")]
    pub k_bar_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub c: f64,
    pub tau: f64,
    pub factor_new: Option<f64>,
    pub factor_rt: Option<f64>,
    pub series: Vec<BoundPoint>,
    pub thresholds: Thresholds,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn build(inputs: &BoundInputs, ks: &[usize]) -> Result<Self> {
        inputs.validate()?;
        let strong = inputs.mu_sum() > 0.0;
        let mut series = Vec::new();
        let mut push = |k: usize, name: &str, value: f64| {
            series.push(BoundPoint {
                k,
                bound_name: name.to_string(),
                value,
            })
        };
        for &k in ks {
            let kf = k as f64;
            push(k, "rbcd_general", rbcd_bound_general(inputs, kf));
            if strong {
                push(k, "rbcd_strong", rbcd_bound_strong(inputs, kf)?);
            }
            push(k, "rt_expected", rt_expected(inputs, kf));
            push(k, "arcd_envelope", arcd_bound_envelope(inputs, kf));
            push(k, "nesterov_arcd", nesterov_arcd_bound(inputs, kf));
        }
        let mut thresholds = Thresholds::default();
        let mut notes = Vec::new();
        if inputs.eps.is_some() && inputs.rho.is_some() {
            let (eps, rho) = inputs.eps_rho()?;
            if eps >= inputs.delta0 {
                notes.push(format!(
                    "eps = {eps} is not below delta0 = {}; the complexity formulas assume it is",
                    inputs.delta0
                ));
            }
            if inputs.tau() < rho {
                notes.push(format!(
                    "tau = {} is below rho = {rho}; K then need not guarantee the stated probability (it can even be negative)",
                    inputs.tau()
                ));
            }
            thresholds.k = Some(rbcd_highprob_k(inputs)?);
            thresholds.k_tilde = rbcd_highprob_k_strong(inputs).ok();
            let m = rbcd_multirun_k(inputs)?;
            thresholds.k_underline = Some(m.k_underline);
            thresholds.r = Some(m.r);
            thresholds.k_m = Some(m.k_m);
            let rt = rt_bounds(inputs, 0.0);
            thresholds.k_bar = rt.k_bar;
            thresholds.k_hat = rt.k_hat;
            thresholds.k_bar_m = rt.k_bar_m;
        }
        Ok(Self {
            inputs: inputs.clone(),
            c: inputs.c(),
            tau: inputs.tau(),
            factor_new: strong_factor(inputs.mu_f, inputs.mu_psi, inputs.n).ok(),
            factor_rt: strong.then(|| rt_strong_factor(inputs.mu_f, inputs.mu_psi, inputs.n)),
            series,
            thresholds,
            notes,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
