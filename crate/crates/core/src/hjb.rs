//! Backward Hamilton-Jacobi-Bellman solver for the exit-time value function,
//! its stationary limit, and the torsion barrier.
//!
//! The transient equation is `-d_t phi - nu Lap(phi) + K |grad phi| - 1 = 0`
//! with final datum `phi(T) = psi` and zero Dirichlet data. After the time
//! reversal `t -> T - t` it marches forward with one IMEX step per dt:
//! the Hamiltonian `K |grad phi|` uses the Godunov upwind gradient magnitude
//! (monotone, hence the discrete comparison principle the test suite leans
//! on), the unit source is explicit, the diffusion implicit.
//!
//! The stationary equation `-nu Lap(Psi) + kappa(0) |grad Psi| = 1` is solved
//! by pseudo-time marching of the same kernel; its fixed point satisfies
//! `nu (-Lap_h) Psi + kappa(0) G(Psi) = 1` with the step size cancelling
//! exactly, so the result is dt-independent up to the stopping tolerance.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::linsolve::solve_shifted_laplacian;
use crate::time::{step_count, time_axis};

/// Lower-bound slack on `phi >= 0`.
const PHI_LOWER_SLACK: f64 = 1e-12;
/// Upper-bound slack on `phi <= torsion + ||psi||_inf`.
const PHI_UPPER_SLACK: f64 = 1e-8;

/// Time-indexed congestion-speed provider; step `k` is time `k dt`.
pub trait SpeedField {
    fn at_step(&self, k: usize) -> &ScalarField;
}

impl SpeedField for ScalarField {
    fn at_step(&self, _: usize) -> &ScalarField {
        self
    }
}

impl SpeedField for [ScalarField] {
    fn at_step(&self, k: usize) -> &ScalarField {
        &self[k]
    }
}

impl SpeedField for Vec<ScalarField> {
    fn at_step(&self, k: usize) -> &ScalarField {
        &self[k]
    }
}

/// Godunov upwind gradient magnitude: per axis
/// `max(backward difference, -forward difference, 0)`, squared, summed over
/// axes, square-rooted. Zero on the boundary layer.
pub fn godunov_gradient_magnitude(phi: &ScalarField) -> ScalarField {
    let g = phi.grid().clone();
    let v = phi.values();
    let mut out = ScalarField::zeros(&g);
    let ny = if g.dim() == 2 { g.nodes(1) } else { 1 };
    for i in 1..g.nodes(0) - 1 {
        for j in 0..ny {
            if g.dim() == 2 && (j == 0 || j == ny - 1) {
                continue;
            }
            let id = g.idx(i, j);
            let mut s = 0.0;
            for axis in 0..g.dim() {
                let stride = if g.dim() == 1 {
                    1
                } else if axis == 0 {
                    g.nodes(1)
                } else {
                    1
                };
                let h = g.spacing(axis);
                let backward = (v[id] - v[id - stride]) / h;
                let forward = (v[id + stride] - v[id]) / h;
                let m = backward.max(-forward).max(0.0);
                s += m * m;
            }
            out.values_mut()[id] = libm::sqrt(s);
        }
    }
    out
}

/// Monotonicity bound of the explicit Hamiltonian step:
/// `dt * max(K) * sqrt(sum_axis h_axis^-2)`.
fn hamiltonian_cfl_ratio(grid: &Grid, speed: &ScalarField, dt: f64) -> f64 {
    let mut inv2 = 0.0;
    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        inv2 += 1.0 / (h * h);
    }
    dt * speed.max_value().max(0.0) * libm::sqrt(inv2)
}

/// One reversed-time IMEX step of the backward equation: takes `phi` at time
/// `t + dt` and the speed field there, returns `phi` at time `t`.
pub fn hjb_step_backward(
    phi: &ScalarField,
    speed: &ScalarField,
    nu: f64,
    dt: f64,
) -> Result<ScalarField> {
    if phi.grid() != speed.grid() {
        return Err(Error::GridMismatch {
            context: "hjb_step_backward",
        });
    }
    if speed.min_value() < 0.0 {
        return Err(Error::Invalid {
            what: "speed field",
            why: format!("K must be >= 0, min = {}", speed.min_value()),
        });
    }
    let ratio = hamiltonian_cfl_ratio(phi.grid(), speed, dt);
    if ratio > 1.0 + 1e-12 {
        return Err(Error::Cfl { ratio });
    }
    let grad_mag = godunov_gradient_magnitude(phi);
    let g = phi.grid().clone();
    let mut star = phi.clone();
    {
        let s = star.values_mut();
        let gm = grad_mag.values();
        let k = speed.values();
        let ny = if g.dim() == 2 { g.nodes(1) } else { 1 };
        for i in 1..g.nodes(0) - 1 {
            for j in 0..ny {
                if g.dim() == 2 && (j == 0 || j == ny - 1) {
                    continue;
                }
                let id = g.idx(i, j);
                s[id] += dt * (1.0 - k[id] * gm[id]);
            }
        }
    }
    star.set_boundary(0.0);
    solve_shifted_laplacian(&g, 1.0, nu * dt, &star)
}

/// Data of one backward value-function solve on `[0, T]`.
pub struct HjbProblem<'a> {
    /// Diffusion coefficient, `> 0`.
    pub nu: f64,
    /// Congestion speed `K = kappa(rho)` per step, `>= 0` and bounded.
    pub speed: &'a dyn SpeedField,
    /// Nonnegative final datum with zero boundary values.
    pub psi: &'a ScalarField,
    /// Horizon `T`; the solve runs on `[0, T]`.
    pub t_end: f64,
    pub dt: f64,
}

impl HjbProblem<'_> {
    pub fn validate(&self) -> Result<usize> {
        if !(self.nu > 0.0) {
            return Err(Error::Invalid {
                what: "nu",
                why: format!("must be > 0, got {}", self.nu),
            });
        }
        let steps = step_count(0.0, self.t_end, self.dt)?;
        if self.psi.min_value() < 0.0 {
            return Err(Error::Invalid {
                what: "psi",
                why: format!("must be nonnegative, min = {}", self.psi.min_value()),
            });
        }
        crate::fp::check_boundary_near_zero(self.psi, "psi")?;
        Ok(steps)
    }
}

/// Value function at every step time, `states[k]` at `t = k dt`.
pub struct HjbSolution {
    pub times: Vec<f64>,
    pub states: Vec<ScalarField>,
}

/// March the backward solve from `T` down to `0`, auditing the comparison
/// bounds `0 <= phi <= torsion + ||psi||_inf` at every step. The bounds are
/// consequences of scheme monotonicity, so violations beyond slack are
/// scheme failures, not data errors.
pub fn hjb_solve(problem: &HjbProblem) -> Result<HjbSolution> {
    let steps = problem.validate()?;
    let times = time_axis(0.0, problem.dt, steps);
    let barrier = torsion_solve(problem.nu, problem.psi.grid())?;
    let psi_sup = problem.psi.linf();
    let scale = (barrier.linf() + psi_sup).max(1.0);

    let mut states: Vec<ScalarField> = Vec::with_capacity(steps + 1);
    let mut final_datum = problem.psi.clone();
    final_datum.set_boundary(0.0);
    states.push(final_datum);
    for back in 0..steps {
        let k = steps - back; // stepping from time index k to k - 1
        let prev = hjb_step_backward(
            &states[back],
            problem.speed.at_step(k),
            problem.nu,
            problem.dt,
        )?;
        audit_bounds(&prev, &barrier, psi_sup, scale, times[k - 1])?;
        states.push(prev);
    }
    states.reverse();
    Ok(HjbSolution { times, states })
}

fn audit_bounds(
    phi: &ScalarField,
    barrier: &ScalarField,
    psi_sup: f64,
    scale: f64,
    t: f64,
) -> Result<()> {
    let min = phi.min_value();
    if min < -PHI_LOWER_SLACK * scale {
        return Err(Error::Scheme {
            what: "value-function positivity",
            value: min,
            bound: 0.0,
            time: t,
        });
    }
    let mut excess: f64 = f64::NEG_INFINITY;
    for (p, b) in phi.values().iter().zip(barrier.values().iter()) {
        excess = excess.max(p - (b + psi_sup));
    }
    if excess > PHI_UPPER_SLACK * scale {
        return Err(Error::Scheme {
            what: "torsion barrier bound",
            value: excess,
            bound: 0.0,
            time: t,
        });
    }
    Ok(())
}

/// Data of the stationary solve for `Psi`.
pub struct StationaryProblem {
    pub grid: Grid,
    /// Diffusion coefficient, `> 0`.
    pub nu: f64,
    /// Uncongested speed `kappa(0)`, `> 0`.
    pub kappa0: f64,
    /// Steady-state tolerance: stop once the per-step increment falls below
    /// `tol * dt` (the increment is `dt` times the equation residual to first
    /// order, so this detection threshold is dt-invariant).
    pub tol: f64,
    /// Pseudo-time cap before reporting non-convergence.
    pub max_pseudo_time: f64,
    /// Pseudo-time step; `None` picks 90% of the Hamiltonian CFL limit.
    pub dt: Option<f64>,
}

impl StationaryProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !(self.kappa0 > 0.0) {
            return Err(Error::Invalid {
                what: "stationary problem",
                why: format!("need nu > 0 and kappa0 > 0, got {}, {}", self.nu, self.kappa0),
            });
        }
        if !(self.tol > 0.0) || !(self.max_pseudo_time > 0.0) {
            return Err(Error::Invalid {
                what: "stationary problem",
                why: format!(
                    "need tol > 0 and max_pseudo_time > 0, got {}, {}",
                    self.tol, self.max_pseudo_time
                ),
            });
        }
        Ok(())
    }

    fn pseudo_dt(&self) -> f64 {
        match self.dt {
            Some(dt) => dt,
            None => {
                let mut inv2 = 0.0;
                for axis in 0..self.grid.dim() {
                    let h = self.grid.spacing(axis);
                    inv2 += 1.0 / (h * h);
                }
                0.9 / (self.kappa0 * libm::sqrt(inv2))
            }
        }
    }
}

/// Pseudo-time marching of the backward kernel with `K = kappa(0)` from
/// `psi = 0` until the increment stalls: computes the stationary exit time
/// `Psi` solving `-nu Lap(Psi) + kappa(0) |grad Psi| = 1` with zero boundary.
pub fn stationary_solve(problem: &StationaryProblem) -> Result<ScalarField> {
    problem.validate()?;
    let dt = problem.pseudo_dt();
    let speed = ScalarField::constant(&problem.grid, problem.kappa0);
    let mut phi = ScalarField::zeros(&problem.grid);
    let mut t = 0.0;
    loop {
        let next = hjb_step_backward(&phi, &speed, problem.nu, dt)?;
        let mut diff: f64 = 0.0;
        for (a, b) in next.values().iter().zip(phi.values().iter()) {
            diff = diff.max((a - b).abs());
        }
        t += dt;
        phi = next;
        if diff <= problem.tol * dt {
            return Ok(phi);
        }
        if t > problem.max_pseudo_time {
            return Err(Error::NonConvergence {
                residual: diff / dt,
                elapsed: t,
            });
        }
    }
}

/// Discrete torsion function: `nu (-Lap_h) Phi = 1` with zero Dirichlet
/// data. Upper barrier for the value function.
pub fn torsion_solve(nu: f64, grid: &Grid) -> Result<ScalarField> {
    if !(nu > 0.0) {
        return Err(Error::Invalid {
            what: "nu",
            why: format!("must be > 0, got {nu}"),
        });
    }
    let rhs = ScalarField::constant(grid, 1.0);
    solve_shifted_laplacian(grid, 0.0, nu, &rhs)
}
