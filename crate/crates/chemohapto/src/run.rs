//! Single-run orchestration and the JSON report.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use chemohapto_core::condition::{check_theorem, classify_output, ThresholdReport};
use chemohapto_core::diagnostics::DiagnosticsRecord;
use chemohapto_core::solver::{DerivedConstants, RunOutput, Status};
use chemohapto_core::{InitialData, ModelParams, Solver};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::initial::build_initial;
use crate::io;

/// A validated configuration with its initial data.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: RunConfig,
    pub params: ModelParams,
    pub solver: Solver,
    pub ic: InitialData,
}

impl Prepared {
    pub fn new(config: RunConfig, base: &Path) -> Result<Self> {
        config.validate()?;
        let params = config.model_params()?;
        let solver = Solver::new(params, config.solver_config()?).map_err(|e| anyhow::anyhow!("{e}"))?;
        let ic = build_initial(&config, base)?;
        ic.validate(&params)
            .map_err(|e| anyhow::anyhow!("initial: {e}"))?;
        Ok(Self {
            config,
            params,
            solver,
            ic,
        })
    }

    pub fn check(&self) -> Result<ThresholdReport> {
        check_theorem(&self.params, &self.ic, &self.config.check_options())
            .map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn run(&self) -> Result<RunOutput> {
        let t = &self.config.time;
        self.solver
            .run(&self.ic, t.t_end, t.cadence)
            .map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// Column maxima over a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Peaks {
    pub mass: f64,
    pub l2_u: f64,
    pub linf_u: f64,
    pub grad_v_l4: f64,
    pub linf_grad_v: f64,
    pub linf_grad_w: f64,
    pub identity_residual: f64,
    pub delta_w_violation_max: f64,
    pub clipped_mass: f64,
}

impl Peaks {
    pub fn of(records: &[DiagnosticsRecord]) -> Self {
        let max = |f: fn(&DiagnosticsRecord) -> f64| records.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        Self {
            mass: max(|r| r.mass),
            l2_u: max(|r| r.l2_u),
            linf_u: max(|r| r.linf_u),
            grad_v_l4: max(|r| r.grad_v_l4),
            linf_grad_v: max(|r| r.linf_grad_v),
            linf_grad_w: max(|r| r.linf_grad_w),
            identity_residual: max(|r| r.identity_residual),
            delta_w_violation_max: max(|r| r.delta_w_violation_max),
            clipped_mass: max(|r| r.clipped_mass),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// `ok`, `diverged` or `failed`.
    pub status: String,
    pub classification: Option<String>,
    pub classification_error: Option<String>,
    pub diverged_at: Option<f64>,
    pub failure: Option<String>,
    pub t_final: f64,
    pub steps: u64,
    pub records: usize,
    pub clip_violation: bool,
    pub derived: Option<DerivedConstants>,
    pub peaks: Peaks,
}

impl RunSummary {
    pub fn of(out: &RunOutput) -> Self {
        let status = if out.failure.is_some() {
            "failed"
        } else if out.final_state.status == Status::Diverged {
            "diverged"
        } else {
            "ok"
        };
        let (classification, classification_error) = if out.failure.is_some() {
            (None, None)
        } else {
            match classify_output(out) {
                Ok(c) => (Some(c.as_str().to_string()), None),
                Err(e) => (None, Some(e.to_string())),
            }
        };
        Self {
            status: status.to_string(),
            classification,
            classification_error,
            diverged_at: out.diverged_at,
            failure: out.failure.as_ref().map(|e| e.to_string()),
            t_final: out.final_state.t,
            steps: out.steps,
            records: out.records.len(),
            clip_violation: out.clip_violation,
            derived: Some(out.derived),
            peaks: Peaks::of(&out.records),
        }
    }
}

/// Contents of `report.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub threshold: Option<ThresholdReport>,
    pub threshold_error: Option<String>,
    pub run: Option<RunSummary>,
}

impl Report {
    pub fn with_threshold(result: Result<ThresholdReport>) -> Self {
        match result {
            Ok(t) => Self {
                threshold: Some(t),
                ..Self::default()
            },
            Err(e) => Self {
                threshold_error: Some(format!("{e:#}")),
                ..Self::default()
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Executes a run, writing every artifact into `dir`.
pub fn run_to_dir(prep: &Prepared, dir: &Path) -> Result<(RunOutput, Report)> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut report = Report::with_threshold(prep.check());
    let out = prep.run()?;
    report.run = Some(RunSummary::of(&out));

    io::write_series(&dir.join("series.csv"), &out.records)?;
    let opts = &prep.config.output;
    let s = &out.final_state;
    for (name, f) in [("u", &s.u), ("v", &s.v), ("w", &s.w)] {
        if opts.fields {
            io::write_field(&dir.join(format!("{name}.bin")), f)?;
        }
        if opts.svg {
            let title = format!("{name} at t = {:.6}", s.t);
            io::write_text(
                &dir.join(format!("{name}.svg")),
                &io::heatmap_svg(f, &title, opts.svg_max),
            )?;
        }
    }
    io::write_text(&dir.join("report.json"), &report.to_json()?)?;
    Ok((out, report))
}

/// Writes the threshold report of `prep` into `dir`.
pub fn check_to_dir(prep: &Prepared, dir: &Path) -> Result<Report> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let report = Report::with_threshold(prep.check());
    io::write_text(&dir.join("report.json"), &report.to_json()?)?;
    Ok(report)
}

/// Human-readable threshold table.
pub fn format_threshold(t: &ThresholdReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for e in &t.mu_r_estimates {
        let v = if e.value.is_infinite() {
            "+inf".to_string()
        } else {
            format!("{:.6e}", e.value.value())
        };
        writeln!(s, "mu_{:<2}            {v}", e.r).unwrap();
    }
    for (name, v) in [
        ("M1", t.m1),
        ("u0 mass", t.u0_mass),
        ("w max", t.w_max),
        ("C_GN (lower)", t.c_gn),
        ("C_GN^4", t.c_gn4_bound),
        ("lhs", t.threshold_lhs),
        ("rhs", t.threshold_rhs),
    ] {
        writeln!(s, "{name:<16} {v:.6e}").unwrap();
    }
    writeln!(s, "tau0 damping     {}", t.tau0_damping_holds).unwrap();
    writeln!(s, "threshold        {}", t.threshold_holds).unwrap();
    writeln!(s, "case             {}", t.condition_case.as_str()).unwrap();
    s
}
