//! Numerical core for the minimal chemotaxis-haptotaxis system
//!
//! ```text
//!   u_t = Δu − χ∇·(u∇v) − ξ∇·(u∇w) + f(u, w)
//!  τv_t = Δv + u − v
//!   w_t = −vw
//! ```
//!
//! on a rectangle with homogeneous Neumann (no-flux) boundary conditions.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation:
//!
//! - [`grid`]: cell-centered grid, Neumann finite-difference operators,
//!   quadrature and norms.
//! - [`spectral`]: exact cosine-transform inverse of `σ − Δ_h`.
//! - [`kinetics`]: source families `f(u, w)`, iterated logarithms, the
//!   asymptotic damping rates `μ_r` and the mass cap `M₁`.
//! - [`solver`]: operator-split time stepping for both `τ = 0` and `τ > 0`.
//! - [`diagnostics`]: entropy-type functionals, the dissipation identity
//!   residual, the `−Δw` bound and Gagliardo–Nirenberg constant estimates.
//! - [`condition`]: evaluation of the boundedness condition and
//!   classification of simulated trajectories.
//!
//! File formats, configuration and the command-line front end live in the
//! `chemohapto` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod condition;
pub mod diagnostics;
mod error;
pub mod grid;
pub mod kinetics;
mod math;
pub mod solver;
pub mod spectral;
pub mod tower;

pub use error::{Error, Result};
pub use grid::{Field2D, Grid};
pub use kinetics::{KineticSpec, Kinetics};
pub use solver::{InitialData, ModelParams, Solver, SolverConfig, State};
