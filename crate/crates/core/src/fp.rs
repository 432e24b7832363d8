//! Forward Fokker-Planck solver with absorbing (homogeneous Dirichlet)
//! boundary: `d_t rho - nu Lap(rho) + div(rho V) = 0`, `rho(0) = rho0 >= 0`,
//! `rho = 0` on the boundary.
//!
//! One step is IMEX: the advection term uses an explicit conservative upwind
//! flux (so the discrete mass change equals the boundary outflux exactly,
//! matching the absorbing-boundary reading of the model), the diffusion a
//! backward-Euler solve. Under the flux CFL bound the explicit part is a
//! convex combination of neighbor values, which gives positivity; the
//! implicit diffusion matrix is an M-matrix and preserves it.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};
use crate::linsolve::solve_shifted_laplacian;
use crate::ops::integrate;
use crate::time::{step_count, time_axis};

/// Absolute slack on the nonnegativity audit (scaled by the field size).
const POSITIVITY_SLACK: f64 = 1e-12;

/// Time-indexed drift provider. Step `k` corresponds to time `t_start + k dt`.
pub trait Drift {
    fn at_step(&self, k: usize) -> &VectorField;
}

impl Drift for VectorField {
    fn at_step(&self, _: usize) -> &VectorField {
        self
    }
}

impl Drift for [VectorField] {
    fn at_step(&self, k: usize) -> &VectorField {
        &self[k]
    }
}

impl Drift for Vec<VectorField> {
    fn at_step(&self, k: usize) -> &VectorField {
        &self[k]
    }
}

/// Data of one forward density solve.
pub struct FpProblem<'a> {
    /// Diffusion coefficient, `> 0`.
    pub nu: f64,
    /// Nonnegative initial density with zero boundary values.
    pub rho0: &'a ScalarField,
    /// Bounded drift, sampled at the start of each step.
    pub drift: &'a dyn Drift,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl FpProblem<'_> {
    pub fn validate(&self) -> Result<usize> {
        if !(self.nu > 0.0) {
            return Err(Error::Invalid {
                what: "nu",
                why: format!("must be > 0, got {}", self.nu),
            });
        }
        let steps = step_count(self.t_start, self.t_end, self.dt)?;
        if self.rho0.min_value() < 0.0 {
            return Err(Error::Invalid {
                what: "rho0",
                why: format!("must be nonnegative, min = {}", self.rho0.min_value()),
            });
        }
        check_boundary_near_zero(self.rho0, "rho0")?;
        Ok(steps)
    }
}

/// Result of a forward solve: the density at every step time, plus its mass
/// series (which the scheme keeps non-increasing).
pub struct FpSolution {
    pub times: Vec<f64>,
    pub states: Vec<ScalarField>,
    pub mass: Vec<f64>,
}

/// Accept boundary entries within round-off of zero (evaluating a profile
/// like `sin(pi x / L)` at `x = L` leaves ~1e-16); the solvers re-zero the
/// layer on ingestion so stored states carry exact zeros.
pub(crate) fn check_boundary_near_zero(f: &ScalarField, what: &'static str) -> Result<()> {
    let tol = 1e-12 * f.linf().max(1.0);
    let mut zeroed = f.clone();
    zeroed.set_boundary(0.0);
    for (a, b) in f.values().iter().zip(zeroed.values().iter()) {
        if (a - b).abs() > tol {
            return Err(Error::Invalid {
                what,
                why: format!("boundary values must vanish (found {a})"),
            });
        }
    }
    Ok(())
}

/// Conservative upwind divergence of `rho V`, returning `(flux_div, ratio)`
/// where `ratio` is the largest per-node outflow coefficient `dt * sum_axis
/// (v_out^+ - v_in^-) / h`. `ratio <= 1` is exactly the condition under
/// which the explicit update keeps a nonnegative diagonal coefficient.
fn upwind_flux_divergence(
    rho: &ScalarField,
    v: &VectorField,
    dt: f64,
) -> Result<(ScalarField, f64)> {
    let g = rho.grid().clone();
    let r = rho.values();
    let mut div = ScalarField::zeros(&g);
    let mut ratio: f64 = 0.0;

    for axis in 0..g.dim() {
        let h = g.spacing(axis);
        let comp = v.component(axis);
        let n_axis = g.nodes(axis);
        let other_nodes = if g.dim() == 2 { g.nodes(1 - axis) } else { 1 };
        let stride = if g.dim() == 1 {
            1
        } else if axis == 0 {
            g.nodes(1)
        } else {
            1
        };
        for other in 0..other_nodes {
            if g.dim() == 2 && (other == 0 || other == other_nodes - 1) {
                continue; // interior rows only; boundary density stays 0
            }
            let base = if g.dim() == 1 {
                0
            } else if axis == 0 {
                other
            } else {
                other * g.nodes(1)
            };
            // face f sits between axis nodes f and f+1
            let mut flux_left = face_flux(r, comp, base, 0, stride);
            for i in 1..n_axis - 1 {
                let flux_right = face_flux(r, comp, base, i, stride);
                let id = base + i * stride;
                div.values_mut()[id] += (flux_right - flux_left) / h;
                flux_left = flux_right;
            }
        }
    }

    // Per-node CFL ratio sums the outflow over axes, so it needs its own pass.
    let ny = if g.dim() == 2 { g.nodes(1) } else { 1 };
    for i in 1..g.nodes(0) - 1 {
        for j in 0..ny {
            if g.dim() == 2 && (j == 0 || j == ny - 1) {
                continue;
            }
            let id = g.idx(i, j);
            let mut outflow = 0.0;
            for axis in 0..g.dim() {
                let comp = v.component(axis);
                let stride = if g.dim() == 1 {
                    1
                } else if axis == 0 {
                    g.nodes(1)
                } else {
                    1
                };
                let v_right = 0.5 * (comp[id] + comp[id + stride]);
                let v_left = 0.5 * (comp[id - stride] + comp[id]);
                outflow += (v_right.max(0.0) - v_left.min(0.0)) / g.spacing(axis);
            }
            if !outflow.is_finite() {
                return Err(Error::Invalid {
                    what: "drift",
                    why: format!("non-finite velocity near node {id}"),
                });
            }
            ratio = ratio.max(dt * outflow);
        }
    }
    Ok((div, ratio))
}

#[inline]
fn face_flux(r: &[f64], comp: &[f64], base: usize, face: usize, stride: usize) -> f64 {
    let lo = base + face * stride;
    let hi = lo + stride;
    let vf = 0.5 * (comp[lo] + comp[hi]);
    vf.max(0.0) * r[lo] + vf.min(0.0) * r[hi]
}

/// One IMEX step: explicit conservative upwind advection, implicit
/// backward-Euler diffusion. Errors if the advection CFL ratio exceeds 1 or
/// if the output dips below the positivity slack.
pub fn fp_step(rho: &ScalarField, v: &VectorField, nu: f64, dt: f64) -> Result<ScalarField> {
    if rho.grid() != v.grid() {
        return Err(Error::GridMismatch { context: "fp_step" });
    }
    let (div, ratio) = upwind_flux_divergence(rho, v, dt)?;
    if ratio > 1.0 + 1e-12 {
        return Err(Error::Cfl { ratio });
    }
    let mut advected = rho.clone();
    advected.add_scaled(&div, -dt)?;
    advected.set_boundary(0.0);
    let out = solve_shifted_laplacian(rho.grid(), 1.0, nu * dt, &advected)?;
    let floor = -POSITIVITY_SLACK * rho.linf().max(1.0);
    let min = out.min_value();
    if min < floor {
        return Err(Error::Scheme {
            what: "density positivity",
            value: min,
            bound: floor,
            time: f64::NAN,
        });
    }
    Ok(out)
}

/// March the density over the span, recording every step. The discrete mass
/// is audited to be non-increasing (a property of the conservative flux plus
/// absorbing boundary, so a violation is reported as a scheme failure).
pub fn fp_solve(problem: &FpProblem) -> Result<FpSolution> {
    let steps = problem.validate()?;
    let times = time_axis(problem.t_start, problem.dt, steps);
    let mut states = Vec::with_capacity(steps + 1);
    let mut mass = Vec::with_capacity(steps + 1);
    let mut initial = problem.rho0.clone();
    initial.set_boundary(0.0);
    mass.push(integrate(&initial));
    states.push(initial);
    let slack = 1e-12 * (1.0 + mass[0]);
    for k in 0..steps {
        let next = fp_step(
            &states[k],
            problem.drift.at_step(k),
            problem.nu,
            problem.dt,
        )
        .map_err(|e| stamp_time(e, times[k]))?;
        let m = integrate(&next);
        if m > mass[k] + slack {
            return Err(Error::Scheme {
                what: "mass monotonicity",
                value: m,
                bound: mass[k],
                time: times[k + 1],
            });
        }
        mass.push(m);
        states.push(next);
    }
    Ok(FpSolution {
        times,
        states,
        mass,
    })
}

fn stamp_time(e: Error, t: f64) -> Error {
    match e {
        Error::Scheme {
            what, value, bound, ..
        } => Error::Scheme {
            what,
            value,
            bound,
            time: t,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use core::f64::consts::PI;

    fn eigenmode(g: &Grid) -> ScalarField {
        let l = g.extent(0);
        ScalarField::from_fn(g, |x, _| libm::sin(PI * x / l))
    }

    #[test]
    fn zero_density_stays_zero() {
        let g = Grid::line(1.0, 19).unwrap();
        let rho = ScalarField::zeros(&g);
        let v = VectorField::zeros(&g);
        let out = fp_step(&rho, &v, 0.1, 1e-3).unwrap();
        assert!(out.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pure_diffusion_matches_implicit_euler_eigenvalue() {
        let l = 1.0;
        let nu = 0.1;
        let dt = 1e-3;
        let g = Grid::line(l, 49).unwrap();
        let h = g.spacing(0);
        let lam = (2.0 / (h * h)) * (1.0 - libm::cos(PI * h / l));
        let factor = 1.0 / (1.0 + nu * dt * lam);
        let rho = eigenmode(&g);
        let v = VectorField::zeros(&g);
        let mut cur = rho.clone();
        for _ in 0..5 {
            cur = fp_step(&cur, &v, nu, dt).unwrap();
        }
        let expect = libm::pow(factor, 5.0);
        for i in 1..g.nodes(0) - 1 {
            let rel = (cur.values()[i] / (expect * rho.values()[i])) - 1.0;
            assert!(rel.abs() < 1e-10, "node {i}: rel err {rel}");
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let g = Grid::line(1.0, 19).unwrap();
        let mut rho = eigenmode(&g);
        rho.set_boundary(0.0);
        let v = VectorField::from_fn(&g, |_, _| (30.0, 0.0));
        // dt * v / h = 0.1 * 30 / 0.05 = 60 >> 1
        match fp_step(&rho, &v, 0.1, 0.1) {
            Err(Error::Cfl { ratio }) => assert!(ratio > 1.0),
            other => panic!("expected CFL error, got {other:?}"),
        }
    }

    #[test]
    fn mass_non_increasing_with_outward_drift() {
        let g = Grid::line(1.0, 49).unwrap();
        let rho0 = eigenmode(&g);
        let v = VectorField::from_fn(&g, |x, _| (if x < 0.5 { -1.0 } else { 1.0 }, 0.0));
        let problem = FpProblem {
            nu: 0.05,
            rho0: &rho0,
            drift: &v,
            t_start: 0.0,
            t_end: 0.2,
            dt: 2e-3,
        };
        let sol = fp_solve(&problem).unwrap();
        for w in sol.mass.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(sol.mass[sol.mass.len() - 1] < sol.mass[0]);
        for s in &sol.states {
            assert!(s.min_value() >= -1e-12);
        }
    }

    #[test]
    fn diverging_flow_respects_positivity_under_sharp_cfl() {
        // velocity pointing away from the center on both sides: the worst
        // case for the per-node outflow coefficient
        let g = Grid::line(1.0, 39).unwrap();
        let mut rho0 = ScalarField::constant(&g, 1.0);
        rho0.set_boundary(0.0);
        let v = VectorField::from_fn(&g, |x, _| (if x < 0.5 { -1.0 } else { 1.0 }, 0.0));
        let h = g.spacing(0);
        let dt = 0.45 * h; // ratio = dt * 2 / h = 0.9 <= 1
        let mut cur = rho0;
        for _ in 0..40 {
            cur = fp_step(&cur, &v, 0.02, dt).unwrap();
            assert!(cur.min_value() >= -1e-12);
        }
    }

    #[test]
    fn rejects_negative_initial_data() {
        let g = Grid::line(1.0, 9).unwrap();
        let mut rho0 = ScalarField::zeros(&g);
        rho0.values_mut()[3] = -0.5;
        let v = VectorField::zeros(&g);
        let problem = FpProblem {
            nu: 0.1,
            rho0: &rho0,
            drift: &v,
            t_start: 0.0,
            t_end: 0.1,
            dt: 0.01,
        };
        assert!(fp_solve(&problem).is_err());
    }

    #[test]
    fn mass_decay_2d_pure_diffusion() {
        let g = Grid::rect(1.0, 1.0, 15, 15).unwrap();
        let rho0 = ScalarField::from_fn(&g, |x, y| libm::sin(PI * x) * libm::sin(PI * y));
        let v = VectorField::zeros(&g);
        let problem = FpProblem {
            nu: 0.1,
            rho0: &rho0,
            drift: &v,
            t_start: 0.0,
            t_end: 0.05,
            dt: 5e-3,
        };
        let sol = fp_solve(&problem).unwrap();
        for w in sol.mass.windows(2) {
            assert!(w[1] < w[0]);
        }
        for s in &sol.states {
            assert!(s.min_value() >= -1e-12);
        }
    }
}
