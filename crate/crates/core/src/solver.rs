//! Operator-split time stepping for
//!
//! ```text
//!   u_t = Δu − ∇·(u(χ∇v + ξ∇w)) + f(u, w)
//!  τv_t = Δv − v + u
//!   w_t = −vw
//! ```
//!
//! One step is: implicit Euler (or an elliptic solve when `τ = 0`) for
//! `v`, the exact exponential integrator for `w`, dimensionally split
//! upwind taxis for `u` with minmod-limited reconstruction, implicit Euler
//! diffusion for `u` and finally an explicit reaction step. Elliptic problems `(σ − Δ_h)x = b` are solved by
//! conjugate gradients preconditioned with the exact cosine-transform
//! inverse, so they converge in one or two iterations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{check_param, Error, Result};
use crate::grid::{self, face_diff_x, face_diff_y, Field2D, Grid};
use crate::kinetics::{KineticSpec, Kinetics};
use crate::math;
use crate::spectral::CosineSolver;

/// Coefficients and geometry of one instance of the system.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub chi: f64,
    pub xi: f64,
    pub tau: f64,
    pub kinetics: KineticSpec,
    pub grid: Grid,
}

impl ModelParams {
    /// `χ, ξ, τ ≥ 0` and a valid kinetic spec. `χ = ξ = 0` is accepted so
    /// that pure reaction-diffusion runs can serve as references.
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name, v: f64| check_param(name, v, v >= 0.0 && v.is_finite(), ">= 0 and finite");
        nonneg("chi", self.chi)?;
        nonneg("xi", self.xi)?;
        nonneg("tau", self.tau)?;
        self.kinetics.validate()
    }
}

/// Initial triple and the constant `A` with `|∇w₀|² ≤ A w₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub u0: Field2D,
    /// Ignored when `τ = 0`.
    pub v0: Field2D,
    pub w0: Field2D,
    pub a: f64,
}

/// Smallest `A` with `(Dw)² ≤ A·w` on every interior face, `w` taken as the
/// mean of the two adjacent cells. `+∞` if `w` vanishes on a face where its
/// difference does not.
pub fn min_gradient_constant(w0: &Field2D) -> f64 {
    let g = w0.grid();
    let v = w0.values();
    let mut a = 0.0f64;
    let mut visit = |d: f64, wf: f64| {
        let d2 = d * d;
        if d2 > 0.0 {
            a = a.max(if wf > 0.0 { d2 / wf } else { f64::INFINITY });
        }
    };
    let dx = face_diff_x(w0);
    for j in 0..g.ny() {
        for i in 0..g.nx() - 1 {
            let k = g.idx(i, j);
            visit(dx[j * (g.nx() - 1) + i], 0.5 * (v[k] + v[k + 1]));
        }
    }
    let dy = face_diff_y(w0);
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() {
            let k = g.idx(i, j);
            visit(dy[j * g.nx() + i], 0.5 * (v[k] + v[k + g.nx()]));
        }
    }
    a
}

impl InitialData {
    /// Builds initial data; `a = None` uses [`min_gradient_constant`].
    pub fn new(u0: Field2D, v0: Field2D, w0: Field2D, a: Option<f64>) -> Result<Self> {
        u0.same_grid(&v0)?;
        u0.same_grid(&w0)?;
        let a = a.unwrap_or_else(|| min_gradient_constant(&w0));
        Ok(Self { u0, v0, w0, a })
    }

    /// Checks the hypotheses on `(u₀, τv₀, w₀)` for the given model.
    ///
    /// Neumann compatibility needs no check: mirror ghosts make every grid
    /// function satisfy the discrete no-flux condition.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidInitialData(msg));
        if self.u0.grid() != &params.grid {
            return Err(Error::GridMismatch);
        }
        self.u0.same_grid(&self.v0)?;
        self.u0.same_grid(&self.w0)?;
        for (name, f) in [("u0", &self.u0), ("w0", &self.w0)] {
            if !f.is_finite() || f.min() < 0.0 {
                return bad(format!("{name} must be finite and nonnegative"));
            }
        }
        if self.u0.max() <= 0.0 {
            return bad("u0 must not vanish identically".into());
        }
        if params.tau > 0.0 && (!self.v0.is_finite() || self.v0.min() < 0.0) {
            return bad("v0 must be finite and nonnegative when tau > 0".into());
        }
        if !self.a.is_finite() || self.a < 0.0 {
            return bad(format!("A = {} must be finite and >= 0", self.a));
        }
        let need = min_gradient_constant(&self.w0);
        if need > self.a * (1.0 + 1e-12) + 1e-12 {
            return bad(format!(
                "|grad w0|^2 <= A w0 fails: A = {} but at least {need} is required",
                self.a
            ));
        }
        Ok(())
    }
}

/// Constants of the pointwise bound `−Δw ≤ τ‖w₀‖_∞ v + κ`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivedConstants {
    /// `‖Δ_h w₀‖_∞ + 4A + ‖w₀‖_∞ / e`
    pub kappa: f64,
    pub w0_max: f64,
    /// First nonzero Neumann eigenvalue of `−Δ` on the rectangle.
    pub lambda1: f64,
}

impl DerivedConstants {
    pub fn new(ic: &InitialData) -> Self {
        let w0_max = ic.w0.max_abs();
        let lap = grid::laplacian_neumann(&ic.w0).max_abs();
        Self {
            kappa: lap + 4.0 * ic.a + w0_max / math::E,
            w0_max,
            lambda1: ic.w0.grid().lambda1(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Status {
    Ok,
    Diverged,
}

/// A snapshot `(u, v, w)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Field2D,
    pub v: Field2D,
    pub w: Field2D,
    pub t: f64,
    pub status: Status,
    pub step_count: u64,
    /// Mass removed by clipping negative `u` in the step that produced
    /// this state.
    pub clipped_mass: f64,
}

impl State {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Numerical knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverConfig {
    /// Relative residual target of the elliptic solves.
    pub elliptic_tol: f64,
    /// CG iteration cap; `0` means `10·(nx + ny)`.
    pub max_iterations: usize,
    /// `‖u‖_∞` above which a run counts as diverged.
    pub overflow_guard: f64,
    /// A run also counts as diverged once a single cell holds this share
    /// of the total mass (grid-scale collapse).
    pub collapse_fraction: f64,
    /// CFL safety factor for the explicit taxis transport.
    pub safety: f64,
    /// The explicit reaction may shrink `u` by at most this factor per step.
    pub reaction_safety: f64,
    pub dt_max: f64,
    /// Per-step clipped mass, relative to the total, above which a run is
    /// flagged invalid.
    pub clip_tolerance: f64,
    /// Order `m` of the `g_m` functional in the diagnostics records.
    pub g_order: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            elliptic_tol: 1e-10,
            max_iterations: 0,
            overflow_guard: 1e12,
            collapse_fraction: 0.5,
            safety: 0.4,
            reaction_safety: 0.5,
            dt_max: 1e-3,
            clip_tolerance: 1e-8,
            g_order: 2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| check_param(name, v, v > 0.0 && v.is_finite(), "> 0 and finite");
        pos("elliptic_tol", self.elliptic_tol)?;
        pos("overflow_guard", self.overflow_guard)?;
        pos("dt_max", self.dt_max)?;
        pos("clip_tolerance", self.clip_tolerance)?;
        check_param(
            "safety",
            self.safety,
            self.safety > 0.0 && self.safety <= 0.5,
            "in (0, 0.5]",
        )?;
        check_param(
            "reaction_safety",
            self.reaction_safety,
            self.reaction_safety > 0.0 && self.reaction_safety < 1.0,
            "in (0, 1)",
        )?;
        check_param(
            "collapse_fraction",
            self.collapse_fraction,
            self.collapse_fraction > 0.0 && self.collapse_fraction <= 1.0,
            "in (0, 1]",
        )?;
        check_param(
            "g_order",
            self.g_order as f64,
            (1..=3).contains(&self.g_order),
            "1, 2 or 3",
        )
    }
}

/// Result of [`Solver::run`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    /// Last valid state; its status is `Diverged` if the run stopped early.
    pub final_state: State,
    /// Time of the step at which divergence was detected.
    pub diverged_at: Option<f64>,
    pub derived: DerivedConstants,
    pub steps: u64,
    /// Some step clipped more than `clip_tolerance` of the mass.
    pub clip_violation: bool,
    /// Error that stopped the integration early; records up to the last
    /// accepted step are kept.
    pub failure: Option<Error>,
}

/// Time integrator bound to one model instance.
#[derive(Clone, Debug)]
pub struct Solver {
    params: ModelParams,
    kinetics: Kinetics,
    config: SolverConfig,
    cosine: CosineSolver,
}

impl Solver {
    pub fn new(params: ModelParams, config: SolverConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        Ok(Self {
            kinetics: Kinetics::new(params.kinetics)?,
            cosine: CosineSolver::new(&params.grid),
            params,
            config,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn kinetics(&self) -> &Kinetics {
        &self.kinetics
    }

    pub fn grid(&self) -> &Grid {
        &self.params.grid
    }

    fn max_iterations(&self) -> usize {
        match self.config.max_iterations {
            0 => 10 * (self.grid().nx() + self.grid().ny()),
            n => n,
        }
    }

    /// Solves `(σ − Δ_h) x = b` by preconditioned conjugate gradients to
    /// `‖r‖₂ ≤ tol·‖b‖₂`.
    pub fn solve_shifted(&self, sigma: f64, b: &Field2D, tol: f64) -> Result<Field2D> {
        check_param("sigma", sigma, sigma > 0.0 && sigma.is_finite(), "> 0")?;
        if b.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        let apply = |x: &Field2D| -> Vec<f64> {
            let mut out: Vec<f64> = x.values().iter().map(|v| sigma * v).collect();
            grid::add_laplacian(x, -1.0, &mut out);
            out
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let bnorm = math::sqrt(dot(b.values(), b.values()));
        if bnorm == 0.0 {
            return Ok(self.grid().zeros());
        }
        // initial guess from the preconditioner; usually already converged
        let mut x = self.cosine.solve(sigma, b);
        let ax = apply(&x);
        let mut r: Vec<f64> = b.values().iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut rel = math::sqrt(dot(&r, &r)) / bnorm;
        if rel <= tol {
            return Ok(x);
        }
        let mut z = self.cosine.solve(sigma, &self.grid().field(r.clone())?);
        let mut p = z.clone();
        let mut rz = dot(&r, z.values());
        let max = self.max_iterations();
        for _ in 1..max {
            let q = apply(&p);
            let alpha = rz / dot(p.values(), &q);
            for (xi, pi) in x.values_mut().iter_mut().zip(p.values()) {
                *xi += alpha * pi;
            }
            for (ri, qi) in r.iter_mut().zip(&q) {
                *ri -= alpha * qi;
            }
            rel = math::sqrt(dot(&r, &r)) / bnorm;
            if rel <= tol {
                return Ok(x);
            }
            if !rel.is_finite() {
                break;
            }
            z = self.cosine.solve(sigma, &self.grid().field(r.clone())?);
            let rz_new = dot(&r, z.values());
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.values_mut().iter_mut().zip(z.values()) {
                *pi = zi + beta * *pi;
            }
        }
        Err(Error::NoConvergence {
            iterations: max,
            residual: rel,
        })
    }

    /// `(I − Δ_h) v = u`, clamped at 0 against round-off.
    pub fn solve_elliptic_v(&self, u: &Field2D, tol: f64) -> Result<Field2D> {
        let v = self.solve_shifted(1.0, u, tol)?;
        Ok(v.map(|x| x.max(0.0)))
    }

    /// State at `t = 0`; for `τ = 0` the given `v0` is replaced by the
    /// elliptic solution.
    pub fn initial_state(&self, ic: &InitialData) -> Result<State> {
        ic.validate(&self.params)?;
        let v = if self.params.tau == 0.0 {
            self.solve_elliptic_v(&ic.u0, self.config.elliptic_tol)?
        } else {
            ic.v0.clone()
        };
        Ok(State {
            u: ic.u0.clone(),
            v,
            w: ic.w0.clone(),
            t: 0.0,
            status: Status::Ok,
            step_count: 0,
            clipped_mass: 0.0,
        })
    }

    fn face_velocities(&self, v: &Field2D, w: &Field2D) -> (Vec<f64>, Vec<f64>) {
        let (chi, xi) = (self.params.chi, self.params.xi);
        let combine = |dv: Vec<f64>, dw: Vec<f64>| -> Vec<f64> {
            dv.iter().zip(&dw).map(|(a, b)| chi * a + xi * b).collect()
        };
        (
            combine(face_diff_x(v), face_diff_x(w)),
            combine(face_diff_y(v), face_diff_y(w)),
        )
    }

    /// `safety·min(hx, hy) / max_face |χDv + ξDw|`, capped by `dt_max`.
    pub fn dt_cfl(&self, state: &State) -> f64 {
        let (ax, ay) = self.face_velocities(&state.v, &state.w);
        let amax = ax.iter().chain(&ay).fold(0.0f64, |m, a| m.max(a.abs()));
        let dt = self.config.safety * self.grid().min_spacing() / amax;
        if dt.is_finite() {
            dt.min(self.config.dt_max)
        } else {
            self.config.dt_max
        }
    }

    /// Largest step for which the explicit reaction shrinks no cell by more
    /// than the factor `reaction_safety`.
    pub fn dt_reaction(&self, state: &State) -> f64 {
        let rate = state
            .u
            .values()
            .iter()
            .zip(state.w.values())
            .filter(|(u, _)| **u > 0.0)
            .map(|(&u, &w)| -self.kinetics.eval(u, w) / u)
            .fold(0.0f64, f64::max);
        if rate > 0.0 {
            (self.config.reaction_safety / rate).min(self.config.dt_max)
        } else {
            self.config.dt_max
        }
    }

    /// Largest admissible step from `state`.
    pub fn dt_stable(&self, state: &State) -> f64 {
        self.dt_cfl(state).min(self.dt_reaction(state))
    }

    /// One operator-split step of length `dt`. The returned state is
    /// marked diverged when `u` blows up; that is a result, not an error.
    pub fn step(&self, state: &State, dt: f64) -> Result<State> {
        check_param("dt", dt, dt > 0.0 && dt.is_finite(), "> 0 and finite")?;
        let g = *self.grid();
        let tol = self.config.elliptic_tol;
        let tau = self.params.tau;

        // (a) v
        let v = if tau > 0.0 {
            let c = tau / dt;
            let rhs = state.v.zip_map(&state.u, |v, u| c * v + u);
            self.solve_shifted(c + 1.0, &rhs, tol)?.map(|x| x.max(0.0))
        } else {
            self.solve_elliptic_v(&state.u, tol)?
        };

        // (b) w
        let w = state.w.zip_map(&v, |w, v| w * math::exp(-v * dt));

        // (c) taxis, x then y
        let (ax, ay) = self.face_velocities(&v, &w);
        let mut u = state.u.clone();
        let mut div = vec![0.0; g.len()];
        grid::upwind_divergence_x(&u, &ax, &mut div);
        for (ui, d) in u.values_mut().iter_mut().zip(&div) {
            *ui -= dt * d;
        }
        div.fill(0.0);
        grid::upwind_divergence_y(&u, &ay, &mut div);
        for (ui, d) in u.values_mut().iter_mut().zip(&div) {
            *ui -= dt * d;
        }

        // (d) implicit diffusion with exact mass restoration
        let mass = grid::integrate(&u);
        let mut u = self.solve_shifted(1.0 / dt, &u.scale(1.0 / dt), tol)?;
        let shift = (mass - grid::integrate(&u)) / g.area();
        for x in u.values_mut() {
            *x += shift;
        }

        // (e) reaction
        if !self.kinetics.spec().is_zero() {
            for (ui, &wi) in u.values_mut().iter_mut().zip(w.values()) {
                *ui += dt * self.kinetics.eval(ui.max(0.0), wi);
            }
        }

        // clipping
        let mut clipped = 0.0;
        for x in u.values_mut() {
            if *x < 0.0 {
                clipped -= *x;
                *x = 0.0;
            }
        }
        let clipped_mass = clipped * g.cell_area();

        let status = if self.is_diverged(&u) || !v.is_finite() || !w.is_finite() {
            Status::Diverged
        } else {
            Status::Ok
        };
        Ok(State {
            u,
            v,
            w,
            t: state.t + dt,
            status,
            step_count: state.step_count + 1,
            clipped_mass,
        })
    }

    fn is_diverged(&self, u: &Field2D) -> bool {
        if !u.is_finite() || u.max_abs() > self.config.overflow_guard {
            return true;
        }
        let total: f64 = u.values().iter().sum();
        total > 0.0 && u.max() >= self.config.collapse_fraction * total
    }

    /// Integrates to `t_end`, recording diagnostics at `t = 0`, at every
    /// multiple of `cadence` and at the end. Errors in setup are returned;
    /// a failing step ends the run and lands in [`RunOutput::failure`].
    pub fn run(&self, ic: &InitialData, t_end: f64, cadence: f64) -> Result<RunOutput> {
        self.run_observed(ic, t_end, cadence, |_, _, _| {})
    }

    /// [`Solver::run`] with a callback `(before, after, dt)` after every
    /// accepted step.
    pub fn run_observed(
        &self,
        ic: &InitialData,
        t_end: f64,
        cadence: f64,
        mut observer: impl FnMut(&State, &State, f64),
    ) -> Result<RunOutput> {
        check_param(
            "t_end",
            t_end,
            t_end >= 0.0 && t_end.is_finite(),
            ">= 0 and finite",
        )?;
        check_param("cadence", cadence, cadence > 0.0 && cadence.is_finite(), "> 0")?;
        let derived = DerivedConstants::new(ic);
        let mut state = self.initial_state(ic)?;
        let mut records = vec![diagnostics::record(self, &derived, None, &state, 0.0)];
        let snap = |t: f64| 1e-10 * (1.0 + t);
        let mut next_record = cadence;
        let mut clip_violation = false;
        let mut diverged_at = None;
        let mut failure = None;

        while t_end - state.t > snap(state.t) {
            let mut dt = self.dt_stable(&state).min(t_end - state.t);
            let to_record = next_record - state.t;
            if to_record > snap(state.t) {
                dt = dt.min(to_record);
            }
            let next = match self.step(&state, dt) {
                Ok(next) => next,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            };
            if !next.is_ok() {
                diverged_at = Some(next.t);
                state.status = Status::Diverged;
                break;
            }
            let mass = grid::integrate(&next.u);
            if next.clipped_mass > self.config.clip_tolerance * mass.max(f64::MIN_POSITIVE) {
                clip_violation = true;
            }
            observer(&state, &next, dt);
            let at_record = next.t >= next_record - snap(next.t);
            let at_end = t_end - next.t <= snap(next.t);
            if at_record || at_end {
                records.push(diagnostics::record(self, &derived, Some(&state), &next, dt));
                while next_record <= next.t + snap(next.t) {
                    next_record += cadence;
                }
            }
            state = next;
        }
        Ok(RunOutput {
            records,
            steps: state.step_count,
            final_state: state,
            diverged_at,
            derived,
            clip_violation,
            failure,
        })
    }
}
