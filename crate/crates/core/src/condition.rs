//! The boundedness condition
//!
//! ```text
//!   either  τ = 0 and μ_r ∈ (0, +∞] for some r ≥ 1
//!   or      (χ − μ₁)⁺ M₁ < 1 / (2 C_GN⁴)
//! ```
//!
//! and the classification of simulated trajectories.

use alloc::vec::Vec;

use crate::diagnostics::{gn_constant_estimate, plateau_ratio, series, DiagnosticsRecord};
use crate::error::{check_param, Error, Result};
use crate::grid;
use crate::kinetics::{m1_compute, mu_r_estimate, Kinetics, MuEstimate, MuOptions, TailSchedule, MAX_TOWER};
use crate::solver::{InitialData, ModelParams, RunOutput, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConditionCase {
    Tau0Damping,
    ThresholdInequality,
    NotSatisfied,
}

impl ConditionCase {
    pub fn is_satisfied(&self) -> bool {
        !matches!(self, ConditionCase::NotSatisfied)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionCase::Tau0Damping => "tau0_damping",
            ConditionCase::ThresholdInequality => "threshold_inequality",
            ConditionCase::NotSatisfied => "not_satisfied",
        }
    }
}

/// Sample points used for the `liminf` in `μ_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScheduleKind {
    /// [`TailSchedule::standard`]: up to `s = 10¹²`.
    Standard,
    /// [`TailSchedule::extended`]: up to `ln ln s = 10³⁰⁰`.
    Extended,
}

impl ScheduleKind {
    pub fn build(&self, r: u32) -> Result<TailSchedule> {
        match self {
            ScheduleKind::Standard => TailSchedule::standard(r),
            ScheduleKind::Extended => TailSchedule::extended(r),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOptions {
    /// `μ_r` is evaluated for `r = 1..=r_max`.
    pub r_max: u32,
    /// `μ_r > mu_tol` counts as positive.
    pub mu_tol: f64,
    pub schedule: ScheduleKind,
    pub mu: MuOptions,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            r_max: 3,
            mu_tol: 1e-3,
            schedule: ScheduleKind::Extended,
            mu: MuOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MuEntry {
    pub r: u32,
    pub value: MuEstimate,
}

/// Every intermediate of the condition.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdReport {
    pub mu_r_estimates: Vec<MuEntry>,
    pub m1: f64,
    pub u0_mass: f64,
    pub w_max: f64,
    /// Lower-bound estimate of `C_GN(4, 2, 2)` on the grid.
    pub c_gn: f64,
    #[cfg_attr(feature = "serde", serde(rename = "c_gn4_bound"))]
    pub c_gn4_bound: f64,
    /// `(χ − μ₁)⁺ M₁`
    pub threshold_lhs: f64,
    /// `1 / (2 C_GN⁴)`
    pub threshold_rhs: f64,
    pub mu_tol: f64,
    pub tau0_damping_holds: bool,
    pub threshold_holds: bool,
    /// First satisfied case.
    pub condition_case: ConditionCase,
}

/// Evaluates the condition for `(params, ic)`.
///
/// Since `C_GN` is only bounded from below, the threshold side errs on the
/// permissive side.
pub fn check_theorem(params: &ModelParams, ic: &InitialData, opts: &CheckOptions) -> Result<ThresholdReport> {
    params.validate()?;
    ic.validate(params)?;
    check_param(
        "r_max",
        opts.r_max as f64,
        (1..=MAX_TOWER).contains(&opts.r_max),
        "an integer in 1..=3",
    )?;
    check_param("mu_tol", opts.mu_tol, opts.mu_tol >= 0.0, ">= 0")?;
    let kinetics = Kinetics::new(params.kinetics)?;
    let w_max = ic.w0.max_abs();

    let mut mu_r_estimates = Vec::with_capacity(opts.r_max as usize);
    for r in 1..=opts.r_max {
        let schedule = opts.schedule.build(r)?;
        let value = mu_r_estimate(&kinetics, r, w_max, &schedule, &opts.mu)?;
        mu_r_estimates.push(MuEntry { r, value });
    }
    let u0_mass = grid::integrate(&ic.u0);
    let m1 = m1_compute(&kinetics, u0_mass, params.grid.area(), w_max)?;
    let c_gn = gn_constant_estimate(&params.grid, 4.0, 2.0, 2.0)?;
    let c_gn4 = c_gn * c_gn * c_gn * c_gn;

    let tau0_damping_holds =
        params.tau == 0.0 && mu_r_estimates.iter().any(|e| e.value.value() > opts.mu_tol);
    let threshold_lhs = match mu_r_estimates[0].value {
        MuEstimate::Infinite => 0.0,
        MuEstimate::Finite(mu1) => (params.chi - mu1).max(0.0) * m1,
    };
    let threshold_rhs = 1.0 / (2.0 * c_gn4);
    let threshold_holds = threshold_lhs < threshold_rhs;
    let condition_case = if tau0_damping_holds {
        ConditionCase::Tau0Damping
    } else if threshold_holds {
        ConditionCase::ThresholdInequality
    } else {
        ConditionCase::NotSatisfied
    };
    Ok(ThresholdReport {
        mu_r_estimates,
        m1,
        u0_mass,
        w_max,
        c_gn,
        c_gn4_bound: c_gn4,
        threshold_lhs,
        threshold_rhs,
        mu_tol: opts.mu_tol,
        tau0_damping_holds,
        threshold_holds,
        condition_case,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Classification {
    BoundedPlateau,
    Growing,
    Diverged,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::BoundedPlateau => "bounded_plateau",
            Classification::Growing => "growing",
            Classification::Diverged => "diverged",
        }
    }
}

/// Minimum trajectory length accepted by [`classify_run`].
pub const MIN_RECORDS: usize = 16;
/// Plateau ratio of `‖u‖_∞` above which a run counts as growing.
pub const GROWTH_RATIO: f64 = 1.25;

/// `diverged` if flagged, `growing` if the plateau ratio of `linf_u`
/// exceeds [`GROWTH_RATIO`], `bounded_plateau` otherwise.
pub fn classify_run(records: &[DiagnosticsRecord], diverged: bool) -> Result<Classification> {
    if diverged {
        return Ok(Classification::Diverged);
    }
    if records.len() < MIN_RECORDS {
        return Err(Error::TooShort {
            records: records.len(),
            required: MIN_RECORDS,
        });
    }
    let ratio = plateau_ratio(&series(records, "linf_u"));
    Ok(if ratio > GROWTH_RATIO {
        Classification::Growing
    } else {
        Classification::BoundedPlateau
    })
}

/// [`classify_run`] on a solver output.
pub fn classify_output(out: &RunOutput) -> Result<Classification> {
    classify_run(&out.records, out.final_state.status == Status::Diverged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kinetics::KineticSpec;
    use crate::math::PI;
    use crate::solver::{Solver, SolverConfig};

    fn setup(chi: f64, tau: f64, kinetics: KineticSpec, mass: f64) -> (ModelParams, InitialData) {
        let g = Grid::unit_square(32).unwrap();
        let params = ModelParams {
            chi,
            xi: 1.0,
            tau,
            kinetics,
            grid: g,
        };
        let raw = g.sample(|x, y| (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.02).exp());
        let u0 = raw.scale(mass / grid::integrate(&raw));
        let w0 = g.sample(|x, y| 0.5 + 0.25 * (PI * x).cos() * (PI * y).cos());
        (params, InitialData::new(u0, g.constant(0.2), w0, None).unwrap())
    }

    #[test]
    fn iterlog_tau0_is_damping_case() {
        let (p, ic) = setup(3.0, 0.0, KineticSpec::IterLog { k: 2, mu: 1.0 }, 4.0);
        let rep = check_theorem(&p, &ic, &CheckOptions::default()).unwrap();
        assert_eq!(rep.condition_case, ConditionCase::Tau0Damping);
        let mu2 = rep.mu_r_estimates[1].value.value();
        assert!((mu2 - 1.0).abs() < 0.05, "{mu2}");
        assert!(rep.m1 >= rep.u0_mass);
    }

    #[test]
    fn logistic_threshold_has_zero_left_side() {
        let (p, ic) = setup(5.0, 1.0, KineticSpec::Logistic { mu: 0.3 }, 4.0);
        let rep = check_theorem(&p, &ic, &CheckOptions::default()).unwrap();
        assert!(rep.mu_r_estimates[0].value.is_infinite());
        assert_eq!(rep.threshold_lhs, 0.0);
        assert_eq!(rep.condition_case, ConditionCase::ThresholdInequality);
    }

    #[test]
    fn zero_kinetics_threshold_arithmetic() {
        for mass in [1e-3, 10.0] {
            let (p, ic) = setup(1.0, 1.0, KineticSpec::Zero, mass);
            let rep = check_theorem(&p, &ic, &CheckOptions::default()).unwrap();
            assert_eq!(rep.mu_r_estimates[0].value, MuEstimate::Finite(0.0));
            assert!((rep.m1 - rep.u0_mass).abs() < 1e-12);
            let expected = rep.u0_mass < 1.0 / (2.0 * rep.c_gn4_bound);
            assert_eq!(rep.condition_case == ConditionCase::ThresholdInequality, expected);
            assert_eq!(expected, mass < 1.0, "threshold {}", rep.threshold_rhs);
        }
    }

    #[test]
    fn verdict_monotone_in_mass() {
        let (p, ic) = setup(
            2.0,
            1.0,
            KineticSpec::SubLogPow {
                a: 1.0,
                b: 1.0,
                gamma: 0.5,
            },
            0.05,
        );
        let base = check_theorem(&p, &ic, &CheckOptions::default()).unwrap();
        for alpha in [0.9, 0.5, 0.1] {
            let scaled = InitialData {
                u0: ic.u0.scale(alpha),
                ..ic.clone()
            };
            let rep = check_theorem(&p, &scaled, &CheckOptions::default()).unwrap();
            assert!(rep.threshold_lhs <= base.threshold_lhs);
            if base.threshold_holds {
                assert!(rep.threshold_holds);
            }
        }
    }

    #[test]
    fn classification() {
        let (p, ic) = setup(1.0, 0.0, KineticSpec::Logistic { mu: 1.0 }, 1.0);
        let s = Solver::new(p, SolverConfig::default()).unwrap();
        let flat = InitialData {
            u0: p.grid.constant(1.0),
            w0: p.grid.zeros(),
            ..ic
        };
        let out = s.run(&flat, 0.2, 0.01).unwrap();
        assert!(out.records.len() >= 16);
        assert_eq!(classify_output(&out).unwrap(), Classification::BoundedPlateau);
        assert_eq!(
            classify_run(&out.records, true).unwrap(),
            Classification::Diverged
        );
        assert!(matches!(
            classify_run(&out.records[..3], false),
            Err(Error::TooShort { .. })
        ));

        let mut growing = out.records.clone();
        for (i, r) in growing.iter_mut().enumerate() {
            r.linf_u = 1.0 + i as f64;
        }
        assert_eq!(classify_run(&growing, false).unwrap(), Classification::Growing);
    }
}
