use flatsteer::{LowerBound, Measure, Relaxed, Run, StopReason};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::presets::ReferenceRow;

pub const REPORT_VERSION: &str = "1";

/// `{"finite": true, "value": v}`, `{"finite": false, "trend": t}` for an
/// unbounded relaxation, or `{"finite": false, "status": s}` when the solve failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRecord {
    pub finite: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}

impl From<LowerBound<f64>> for LowerBoundRecord {
    fn from(lb: LowerBound<f64>) -> Self {
        let mut r = LowerBoundRecord {
            finite: false,
            value: None,
            trend: None,
            status: None,
        };
        match lb {
            LowerBound::Finite(v) => {
                r.finite = true;
                r.value = Some(v);
            }
            LowerBound::Unbounded { trend } => r.trend = Some(trend),
            LowerBound::Unavailable { status } => r.status = Some(status.as_str().into()),
        }
        r
    }
}

impl LowerBoundRecord {
    pub fn is_unbounded(&self) -> bool {
        !self.finite && self.trend.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub point: Vec<f64>,
    pub weight: f64,
    pub f_value: Option<f64>,
    pub grad_norm: Option<f64>,
}

pub fn atom_records(mu: &Measure) -> Vec<AtomRecord> {
    mu.atoms
        .iter()
        .zip(&mu.weights)
        .zip(&mu.per_atom)
        .map(|((a, &w), info)| AtomRecord {
            point: a.clone(),
            weight: w,
            f_value: info.f_value,
            grad_norm: info.grad_norm,
        })
        .collect()
}

/// `[lower, upper]`; a missing `lower` stands for `−∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Option<f64>,
    pub upper: f64,
}

/// One λ of a steering sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub lambda: f64,
    /// Stop reason of the steering loop, or `"error"`.
    pub status: String,
    pub lower_bound: Option<LowerBoundRecord>,
    pub upper_bound: Option<f64>,
    /// `yes`, `approx` or `no` for the last accepted matrix.
    pub flat: String,
    pub flat_residual: Option<f64>,
    pub atoms: Vec<AtomRecord>,
    pub verdict: Option<String>,
    pub certified_interval: Option<Interval>,
    pub outer_iterations: usize,
    pub wall_time_s: f64,
    pub seed: u64,
    /// `Σ f_α y_α` at the last accepted matrix.
    pub objective: Option<f64>,
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    pub fn from_run(run: &Run, seed: u64, wall_time_s: f64) -> Self {
        RunReport {
            lambda: run.lambda,
            status: run.stop.as_str().into(),
            lower_bound: Some(run.lower_bound.into()),
            upper_bound: run.upper_bound,
            flat: run.state.flat.as_str().into(),
            flat_residual: Some(run.state.flat_residual),
            atoms: run.measure.as_ref().map(atom_records).unwrap_or_default(),
            verdict: run.verdict.map(|v| v.as_str().into()),
            certified_interval: run
                .certified_interval
                .map(|(lower, upper)| Interval { lower, upper }),
            outer_iterations: run.outer_iterations,
            wall_time_s,
            seed,
            objective: Some(run.state.objective_value),
            scale: Some(run.scale),
            error: None,
        }
    }

    pub fn failed(lambda: f64, seed: u64, error: String, wall_time_s: f64) -> Self {
        RunReport {
            lambda,
            status: "error".into(),
            lower_bound: None,
            upper_bound: None,
            flat: "no".into(),
            flat_residual: None,
            atoms: Vec::new(),
            verdict: None,
            certified_interval: None,
            outer_iterations: 0,
            wall_time_s,
            seed,
            objective: None,
            scale: None,
            error: Some(error),
        }
    }

    pub fn reached_flat(&self) -> bool {
        self.status == StopReason::Flat.as_str() || self.status == StopReason::ApproximateFlat.as_str()
    }
}

/// A plain relaxation solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxReport {
    pub degree: usize,
    pub mode: String,
    pub status: String,
    pub lower_bound: LowerBoundRecord,
    pub solver_iterations: usize,
    pub rank_full: Option<usize>,
    pub rank_sub: Option<usize>,
    pub flat: bool,
    pub hankel_applicable: bool,
    pub hankel_modified: bool,
    pub atoms: Vec<AtomRecord>,
    pub verdict: Option<String>,
    pub certified_optimal: bool,
    pub wall_time_s: f64,
}

impl RelaxReport {
    pub fn from_outcome(out: &Relaxed, wall_time_s: f64) -> Self {
        RelaxReport {
            degree: out.degree,
            mode: out.mode.as_str().into(),
            status: out.status.as_str().into(),
            lower_bound: out.lower_bound.into(),
            solver_iterations: out.iterations,
            rank_full: out.report.as_ref().map(|r| r.rank_full),
            rank_sub: out.report.as_ref().map(|r| r.rank_sub),
            flat: out.report.as_ref().is_some_and(|r| r.is_flat),
            hankel_applicable: out.hankel_applicable,
            hankel_modified: out.hankel_modified,
            atoms: out.measure.as_ref().map(atom_records).unwrap_or_default(),
            verdict: out.verdict.map(|v| v.as_str().into()),
            certified_optimal: out.certified_optimal,
            wall_time_s,
        }
    }
}

/// Top-level JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: RunConfig,
    pub runs: Vec<RunReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxReport>,
    /// Table number of a reproduction run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<u8>,
    /// Published values for the rows of a reproduction run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference: Vec<ReferenceRow>,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Report {
            version: REPORT_VERSION.into(),
            config,
            runs: Vec::new(),
            relaxation: None,
            table: None,
            reference: Vec::new(),
        }
    }

    /// The same report with every timing field zeroed.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for run in &mut r.runs {
            run.wall_time_s = 0.0;
        }
        if let Some(x) = r.relaxation.as_mut() {
            x.wall_time_s = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// 3 when every run (or the relaxation) failed in the solver, 4 when every
    /// run ran out of budget, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if let Some(x) = &self.relaxation {
            let failed = x.status == "numerical_failure";
            return if failed { 3 } else { 0 };
        }
        if self.runs.is_empty() {
            return 0;
        }
        let all = |p: &dyn Fn(&RunReport) -> bool| self.runs.iter().all(p);
        if all(&|r| r.status == "budget") {
            4
        } else if all(&|r| r.status == "solver_failure" || r.status == "error") {
            3
        } else {
            0
        }
    }
}
