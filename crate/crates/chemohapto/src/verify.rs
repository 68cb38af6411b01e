//! Property suites run at three refinement levels.

use std::fmt::Write as _;

use anyhow::Result;
use chemohapto_core::diagnostics::{energy_identity, IdentityKernel, LogGnChecker};
use chemohapto_core::grid::{chemotactic_divergence, integrate, laplacian_neumann};
use chemohapto_core::kinetics::{dissipation_weight, e_tower, iter_log, shifted_iter_log};
use chemohapto_core::{Field2D, Grid, InitialData, KineticSpec, ModelParams, Solver, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identity,
    Iterlog,
    Loggn,
    Operators,
}

/// One row of a suite table.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub level: String,
    pub value: f64,
    /// Observed order against the previous level.
    pub order: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<36} {:<12} {:>14} {:>8}  result\n",
            "check", "level", "value", "order"
        );
        for c in &self.checks {
            let order = c.order.map_or("-".to_string(), |o| format!("{o:.3}"));
            let result = if c.pass { "pass" } else { "FAIL" };
            writeln!(
                s,
                "{:<36} {:<12} {:>14.6e} {:>8}  {result}",
                c.name, c.level, c.value, order
            )
            .unwrap();
        }
        s
    }
}

pub fn run_suite(suite: Suite) -> Result<SuiteReport> {
    match suite {
        Suite::Operators => operators(),
        Suite::Identity => identity(),
        Suite::Iterlog => iterlog(),
        Suite::Loggn => loggn(),
    }
}

fn order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

fn err(e: chemohapto_core::Error) -> anyhow::Error {
    anyhow::anyhow!("{e}")
}

fn smooth_random(g: &Grid, rng: &mut ChaCha8Rng) -> Field2D {
    let pi = std::f64::consts::PI;
    let c: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
    g.sample(|x, y| {
        (0..4)
            .flat_map(|k| (0..4).map(move |l| (k, l)))
            .map(|(k, l)| c[4 * k + l] * (k as f64 * pi * x).cos() * (l as f64 * pi * y).cos())
            .sum()
    })
}

/// Laplacian truncation order on the `(1, 1)` eigenfunction and
/// discrete conservation of the flux operators.
pub fn operators() -> Result<SuiteReport> {
    let pi = std::f64::consts::PI;
    let mut checks = Vec::new();
    let mut prev: Option<f64> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [32usize, 64, 128] {
        let g = Grid::unit_square(n).map_err(err)?;
        let level = format!("n={n}");
        let phi = g.sample(|x, y| (pi * x).cos() * (pi * y).cos());
        let lap = laplacian_neumann(&phi);
        let e = lap
            .values()
            .iter()
            .zip(phi.values())
            .map(|(l, p)| (l + 2.0 * pi * pi * p).abs())
            .fold(0.0, f64::max);
        let o = prev.map(|p| order(p, e, 2.0));
        checks.push(Check {
            name: "laplacian max error".into(),
            level: level.clone(),
            value: e,
            order: o,
            pass: o.is_none_or(|o| (o - 2.0).abs() <= 0.2),
        });
        prev = Some(e);

        let f = smooth_random(&g, &mut rng).map(|x| x.exp());
        let lf = laplacian_neumann(&f);
        let rel = |d: &Field2D| integrate(d).abs() / integrate(&d.map(f64::abs)).max(f64::MIN_POSITIVE);
        let cons = rel(&lf);
        checks.push(Check {
            name: "laplacian conservation".into(),
            level: level.clone(),
            value: cons,
            order: None,
            pass: cons <= 1e-12,
        });
        let v = smooth_random(&g, &mut rng);
        let div = rel(&chemotactic_divergence(&f, &v));
        checks.push(Check {
            name: "taxis flux conservation".into(),
            level: level.clone(),
            value: div,
            order: None,
            pass: div <= 1e-12,
        });

        let params = ModelParams {
            chi: 1.0,
            xi: 1.0,
            tau: 0.0,
            kinetics: KineticSpec::Zero,
            grid: g,
        };
        let solver = Solver::new(params, SolverConfig::default()).map_err(err)?;
        let ve = solver.solve_elliptic_v(&f, 1e-12).map_err(err)?;
        let m = integrate(&f);
        let ell = (integrate(&ve) - m).abs() / m;
        checks.push(Check {
            name: "elliptic solve mass".into(),
            level: level.clone(),
            value: ell,
            order: None,
            pass: ell <= 1e-12,
        });
        let w0 = g.sample(|x, y| 0.5 + 0.2 * (pi * x).cos() * (pi * y).cos());
        let ic = InitialData::new(f.clone(), g.zeros(), w0, None).map_err(err)?;
        let s0 = solver.initial_state(&ic).map_err(err)?;
        let s1 = solver.step(&s0, solver.dt_stable(&s0)).map_err(err)?;
        let step = (integrate(&s1.u) - m).abs() / m;
        checks.push(Check {
            name: "step mass (zero kinetics)".into(),
            level,
            value: step,
            order: None,
            pass: step <= 1e-12,
        });
    }
    Ok(SuiteReport { checks })
}

/// Largest entropy-identity residual over a short smooth full-model run
/// with `dt = h²/4`.
pub fn identity_residual(n: usize, t_end: f64) -> Result<f64> {
    let pi = std::f64::consts::PI;
    let g = Grid::unit_square(n).map_err(err)?;
    let params = ModelParams {
        chi: 1.0,
        xi: 1.0,
        tau: 1.0,
        kinetics: KineticSpec::Logistic { mu: 1.0 },
        grid: g,
    };
    let h = g.hx();
    let config = SolverConfig {
        dt_max: 0.25 * h * h,
        ..SolverConfig::default()
    };
    let solver = Solver::new(params, config).map_err(err)?;
    let u0 = g.sample(|x, y| 1.0 + 0.5 * (pi * x).cos() * (pi * y).cos());
    let v0 = g.sample(|_, y| 1.0 + 0.25 * (pi * y).cos());
    let w0 = g.sample(|x, y| 0.5 + 0.2 * (pi * x).cos() * (2.0 * pi * y).cos());
    let ic = InitialData::new(u0, v0, w0, None).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut failure = None;
    let out = solver
        .run_observed(&ic, t_end, t_end, |a, b, dt| {
            match energy_identity(&solver, a, b, dt, IdentityKernel::Entropy) {
                Ok(bal) => worst = worst.max(bal.residual()),
                Err(e) => failure = Some(e),
            }
        })
        .map_err(err)?;
    if let Some(e) = failure.or(out.failure) {
        return Err(err(e));
    }
    Ok(worst)
}

/// Entropy identity under joint refinement `dt ∝ h²`.
pub fn identity() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let mut prev: Option<f64> = None;
    for n in [16usize, 32, 64] {
        let r = identity_residual(n, 0.02)?;
        let o = prev.map(|p| order(p, r, 2.0));
        checks.push(Check {
            name: "entropy identity residual".into(),
            level: format!("n={n}"),
            value: r,
            order: o,
            pass: r.is_finite() && o.is_none_or(|o| o >= 0.9),
        });
        prev = Some(r);
    }
    Ok(SuiteReport { checks })
}

/// Positivity of `h'`, `h''`-based dissipation weight and the finite
/// difference error of `h'` for `h = ln^[m](· + e^[m])`, at three step
/// sizes.
pub fn iterlog() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for m in 1..=3u32 {
        let shift = e_tower(m).map_err(err)?;
        let mut prev: Option<f64> = None;
        for (li, rel_step) in [1e-2, 5e-3, 2.5e-3].into_iter().enumerate() {
            let mut positive = true;
            let mut worst: f64 = 0.0;
            for j in 0..400 {
                let z = 10f64.powf(-3.0 + 9.0 * j as f64 / 399.0);
                let h = |z: f64| iter_log(m, z + shift);
                let dz = rel_step * (z + shift);
                let (hp, hm, h0) = (
                    h(z + dz).map_err(err)?,
                    h(z - dz).map_err(err)?,
                    h(z).map_err(err)?,
                );
                let fd1 = (hp - hm) / (2.0 * dz);
                let fd2 = (hp - 2.0 * h0 + hm) / (dz * dz);
                let y = z + shift;
                let weight_fd = 2.0 * fd1 + y * fd2;
                let weight = dissipation_weight(m, z).map_err(err)?;
                positive &= fd1 > 0.0 && weight_fd > 0.0 && weight > 0.0;
                let (_, d1, _) = shifted_iter_log(m, z).map_err(err)?;
                worst = worst.max((fd1 - d1).abs() / d1);
            }
            let level = format!("m={m} l={li}");
            checks.push(Check {
                name: "h', dissipation weight > 0".into(),
                level: level.clone(),
                value: if positive { 1.0 } else { 0.0 },
                order: None,
                pass: positive,
            });
            let o = prev.map(|p| order(p, worst, 2.0));
            checks.push(Check {
                name: "h' finite difference rel error".into(),
                level,
                value: worst,
                order: o,
                pass: worst < 1e-2 && o.is_none_or(|o| o >= 1.5),
            });
            prev = Some(worst);
        }
    }
    Ok(SuiteReport { checks })
}

/// Positive field with random smooth shape and amplitude `10^[-2, 3]`.
pub fn random_positive_field(g: &Grid, rng: &mut ChaCha8Rng) -> Field2D {
    let amp = 10f64.powf(rng.random_range(-2.0..3.0));
    let spread = rng.random_range(0.1..3.0);
    smooth_random(g, rng).map(|x| amp * (spread * x).exp())
}

/// Number of fields, out of `count`, on which the logarithmic
/// interpolation inequality fails.
pub fn loggn_failures(g: &Grid, m: u32, count: usize, seed: u64) -> Result<usize> {
    let chk = LogGnChecker::new(g, m, 3.0, 1.0, 0.1).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..count {
        let phi = random_positive_field(g, &mut rng);
        if !chk.check(&phi).map_err(err)?.holds {
            failures += 1;
        }
    }
    Ok(failures)
}

/// The logarithmic interpolation inequality on 50 random fields per
/// order and grid.
pub fn loggn() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for n in [16usize, 32, 64] {
        let g = Grid::unit_square(n).map_err(err)?;
        for m in 1..=2u32 {
            let failures = loggn_failures(&g, m, 50, 11 + m as u64)?;
            checks.push(Check {
                name: format!("log-GN failures (m={m}, q=3, r=1)"),
                level: format!("n={n}"),
                value: failures as f64,
                order: None,
                pass: failures == 0,
            });
        }
    }
    Ok(SuiteReport { checks })
}
