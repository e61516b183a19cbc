//! Per-run traces and their CSV form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Which iteration produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    Rbcd,
    ArcdGamma,
    ArcdSimple,
}

impl MethodTag {
    pub fn is_accelerated(self) -> bool {
        !matches!(self, MethodTag::Rbcd)
    }
}

/// Accelerated-method state at a record point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArcdExtras {
    /// `α_{k−1}`, the coefficient of the step that produced `x^k`.
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub phistar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `F(x^k)`, recomputed from scratch.
    pub objective: f64,
    /// Block `i_{k−1}` whose update produced `x^k`; `None` at `k = 0`.
    pub block: Option<usize>,
    /// `‖g(x^k)‖*_L`, when requested.
    pub gdual: Option<f64>,
    pub arcd: Option<ArcdExtras>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub method: MethodTag,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    pub final_point: Vec<f64>,
}

/// Record points for a run of `max_iters` steps thinned by `every`:
/// multiples of `every` plus the final iteration.
pub fn is_record_point(k: usize, max_iters: usize, every: usize) -> bool {
    k.is_multiple_of(every) || k == max_iters
}

fn fmt_num(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        let _ = write!(out, "{v:.16e}");
    }
}

impl RunTrace {
    pub fn ks(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.k).collect()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map(|r| r.objective).unwrap_or(f64::NAN)
    }

    /// CSV with header `k,F,gap,block,gdual` (plus `alpha,gamma,lambda,phistar`
    /// for accelerated runs). Numbers carry 17 significant digits; absent
    /// values are empty fields, and `gap` is empty unless `f_star` is given.
    pub fn to_csv(&self, f_star: Option<f64>) -> String {
        let accel = self.method.is_accelerated();
        let mut out = String::from("k,F,gap,block,gdual");
        if accel {
            out.push_str(",alpha,gamma,lambda,phistar");
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},", r.k);
            fmt_num(&mut out, Some(r.objective));
            out.push(',');
            fmt_num(&mut out, f_star.map(|fs| r.objective - fs));
            out.push(',');
            if let Some(b) = r.block {
                let _ = write!(out, "{b}");
            }
            out.push(',');
            fmt_num(&mut out, r.gdual);
            if accel {
                let e = r.arcd.unwrap_or_default();
                for v in [e.alpha, e.gamma, e.lambda, e.phistar] {
                    out.push(',');
                    fmt_num(&mut out, v);
                }
            }
            out.push('\n');
        }
        out
    }
}
