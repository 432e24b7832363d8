//! Finite-difference solvers for second-order minimal-time mean field games.
//!
//! The model couples two parabolic PDEs on a bounded domain with homogeneous
//! Dirichlet data: a forward Fokker-Planck equation for the agent density
//! `rho` and a backward Hamilton-Jacobi-Bellman equation for the expected
//! exit time `phi`,
//!
//! ```text
//! d_t rho - nu Lap(rho) + div(rho V)            = 0      (forward)
//! -d_t phi - nu Lap(phi) + kappa(rho) |grad phi| - 1 = 0  (backward)
//! ```
//!
//! with the optimal drift `V = -kappa(rho) grad(phi) / |grad(phi)|` (extended
//! by zero where the gradient vanishes). Agents move with a speed capped by a
//! non-increasing congestion law `kappa` and exit through the boundary, which
//! absorbs them.
//!
//! The crate provides:
//!
//! * [`grid`]: tensor-product grids in 1D/2D, scalar/vector fields, and the
//!   shared discrete operators (Laplacian, gradients, quadrature, norms);
//! * [`fp`]: the forward density solver (implicit diffusion, conservative
//!   upwind advection, absorbing boundary);
//! * [`hjb`]: the backward value-function solver (Godunov Hamiltonian),
//!   the stationary limit equation, and the torsion barrier;
//! * [`coupling`]: the damped fixed-point iteration realizing the mean field
//!   equilibrium, plus a horizon sweep for the infinite-horizon limit;
//! * [`diagnostics`]: checks for the structural identities the coupled
//!   system satisfies (exit-time identity, exponential long-time decay,
//!   H1 convergence, parabolic L^p -> L^inf regularization ratios).
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion CLI
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod fp;
pub mod grid;
pub mod hjb;
pub mod kappa;
pub mod linsolve;
pub mod ops;
pub mod time;

pub use coupling::{
    mfg_solve_finite, mfg_solve_horizon_sweep, select_velocity, MfgConfig, MfgSolution,
    SweepResult, VelocityInit,
};
pub use diagnostics::{
    check_long_time, check_regularization, check_rho_phi_identity, fit_exponential, CheckReport,
    RateFit, RunRecord,
};
pub use error::{Error, Result};
pub use fp::{fp_solve, fp_step, Drift, FpProblem, FpSolution};
pub use grid::{Grid, ScalarField, VectorField};
pub use hjb::{
    hjb_solve, hjb_step_backward, stationary_solve, torsion_solve, HjbProblem, HjbSolution,
    SpeedField, StationaryProblem,
};
pub use kappa::KappaModel;
pub use ops::{discrete_norms, gradient_centered, gradient_upwind, integrate, laplacian, Norms};
