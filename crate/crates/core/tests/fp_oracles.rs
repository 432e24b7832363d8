//! Oracle tests for the forward density solver: spectral decay against the
//! implicit-Euler eigenvalue, Richardson step halving, drift comparisons,
//! self-convergence, and the discrete weak-form residual.

mod common;

use mfg_core::ops::l1_distance;
use mfg_core::{fp_solve, fp_step, integrate, FpProblem, Grid, ScalarField, VectorField};
use std::f64::consts::PI;

fn eigenmode(g: &Grid, amp: f64) -> ScalarField {
    let l = g.extent(0);
    let mut f = ScalarField::from_fn(g, move |x, _| amp * (PI * x / l).sin());
    f.set_boundary(0.0);
    f
}

#[test]
fn eigenmode_decay_matches_discrete_rate_and_mass() {
    let l = 1.0;
    let nu = 0.1;
    let dt = 1e-3;
    let g = Grid::line(l, 99).unwrap();
    let h = g.spacing(0);
    let lam = (2.0 / (h * h)) * (1.0 - (PI * h / l).cos());
    let factor = 1.0 / (1.0 + nu * dt * lam);
    let rho0 = eigenmode(&g, 2.0);
    let v = VectorField::zeros(&g);
    let sol = fp_solve(&FpProblem {
        nu,
        rho0: &rho0,
        drift: &v,
        t_start: 0.0,
        t_end: 0.05,
        dt,
    })
    .unwrap();
    // the discrete eigenvector scales exactly: per-step ratio equals the
    // implicit-Euler factor to round-off, and so does the mass series
    for k in 1..sol.mass.len() {
        let rel = sol.mass[k] / (sol.mass[k - 1] * factor) - 1.0;
        assert!(rel.abs() < 1e-10, "step {k}: rel {rel}");
    }
    let mid = g.nodes(0) / 2;
    let expect = rho0.values()[mid] * factor.powi(sol.states.len() as i32 - 1);
    let last = sol.states.last().unwrap().values()[mid];
    assert!((last / expect - 1.0).abs() < 1e-10);
}

#[test]
fn step_halving_is_second_order_locally() {
    let g = Grid::line(1.0, 99).unwrap();
    let nu = 0.05;
    let rho = eigenmode(&g, 1.0);
    let v = VectorField::from_fn(&g, |_, _| (0.3, 0.0));
    // measured away from the absorbing boundary, where the implicit
    // diffusion is stiff (nu dt / h^2 ~ 1) and splitting comparisons lose
    // an order in the layer of width O(h)
    let local_error = |dt: f64| {
        let one = fp_step(&rho, &v, nu, dt).unwrap();
        let half = fp_step(&rho, &v, nu, dt / 2.0).unwrap();
        let two = fp_step(&half, &v, nu, dt / 2.0).unwrap();
        let mut worst: f64 = 0.0;
        for i in 6..g.node_count() - 6 {
            worst = worst.max((one.values()[i] - two.values()[i]).abs());
        }
        worst
    };
    let e1 = local_error(5e-4);
    let e2 = local_error(2.5e-4);
    let order = (e1 / e2).log2();
    assert!(
        (1.7..=2.3).contains(&order),
        "local order {order} (errors {e1}, {e2})"
    );
}

#[test]
fn inward_drift_retains_more_mass_than_no_drift() {
    for n in [49usize, 99] {
        let g = Grid::line(1.0, n).unwrap();
        let rho0 = eigenmode(&g, 1.0);
        let inward = VectorField::from_fn(&g, |x, _| (if x < 0.5 { 0.5 } else { -0.5 }, 0.0));
        let still = VectorField::zeros(&g);
        let solve = |drift: &VectorField| {
            fp_solve(&FpProblem {
                nu: 0.1,
                rho0: &rho0,
                drift,
                t_start: 0.0,
                t_end: 0.3,
                dt: 1e-3,
            })
            .unwrap()
        };
        let with_drift = solve(&inward);
        let without = solve(&still);
        for (a, b) in with_drift.mass.iter().zip(without.mass.iter()) {
            assert!(*a >= b - 1e-13, "n = {n}: inward {a} < free {b}");
        }
        assert!(with_drift.mass.last().unwrap() > without.mass.last().unwrap());
    }
}

#[test]
fn self_convergence_in_l1_is_at_least_first_order() {
    // nested grids n, 2n+1 share the coarse nodes; compare final densities
    // on the coarse grid
    let t_end = 0.2;
    let solve = |n: usize, dt: f64| {
        let g = Grid::line(1.0, n).unwrap();
        let rho0 = common::gaussian_bump(&g, 1.0, 0.4, 0.15);
        let v = VectorField::from_fn(&g, |x, _| ((x - 0.3).sin() * 0.8, 0.0));
        fp_solve(&FpProblem {
            nu: 0.05,
            rho0: &rho0,
            drift: &v,
            t_start: 0.0,
            t_end,
            dt,
        })
        .unwrap()
    };
    let restrict = |fine: &ScalarField, coarse_grid: &Grid| {
        let mut out = ScalarField::zeros(coarse_grid);
        for i in 0..coarse_grid.nodes(0) {
            out.values_mut()[i] = fine.values()[2 * i];
        }
        out
    };
    let coarse = solve(49, 2e-3);
    let mid = solve(99, 1e-3);
    let fine = solve(199, 5e-4);
    let gc = Grid::line(1.0, 49).unwrap();
    let gm = Grid::line(1.0, 99).unwrap();
    let e1 = l1_distance(
        coarse.states.last().unwrap(),
        &restrict(mid.states.last().unwrap(), &gc),
    )
    .unwrap();
    let e2 = l1_distance(
        mid.states.last().unwrap(),
        &restrict(fine.states.last().unwrap(), &gm),
    )
    .unwrap();
    let order = (e1 / e2).log2();
    assert!(order >= 0.7, "self-convergence order {order} ({e1} vs {e2})");
}

/// Discrete analogue of the weak formulation: for a smooth test function
/// vanishing at the final time and on the boundary,
/// `-int int rho d_t eta - int int (nu rho Lap eta + rho V . grad eta)`
/// must equal `int rho0 eta(0)` up to O(dt + h).
fn weak_form_residual(n: usize, dt: f64) -> f64 {
    let l = 1.0;
    let t_end = 0.4;
    let g = Grid::line(l, n).unwrap();
    let rho0 = common::gaussian_bump(&g, 1.0, 0.5, 0.2);
    let v = VectorField::from_fn(&g, |x, _| (0.6 * (2.0 * x - 1.0), 0.0));
    let sol = fp_solve(&FpProblem {
        nu: 0.08,
        rho0: &rho0,
        drift: &v,
        t_start: 0.0,
        t_end,
        dt,
    })
    .unwrap();

    let eta = |t: f64, x: f64| (1.0 - t / t_end).powi(2) * (PI * x / l).sin();
    let eta_t = |t: f64, x: f64| -2.0 / t_end * (1.0 - t / t_end) * (PI * x / l).sin();
    let eta_lap = |t: f64, x: f64| -(PI / l) * (PI / l) * eta(t, x);
    let eta_x = |t: f64, x: f64| (1.0 - t / t_end).powi(2) * (PI / l) * (PI * x / l).cos();

    let mut space_time = 0.0;
    for (k, &t) in sol.times.iter().enumerate() {
        let w_t = if k == 0 || k == sol.times.len() - 1 {
            0.5 * dt
        } else {
            dt
        };
        let rho = &sol.states[k];
        let mut inner = 0.0;
        for i in 0..g.nodes(0) {
            let x = g.coord(0, i);
            let w_x = g.quad_weight(i, 0);
            let r = rho.values()[i];
            inner += w_x
                * (-r * eta_t(t, x) - 0.08 * r * eta_lap(t, x)
                    - r * v.component(0)[i] * eta_x(t, x));
        }
        space_time += w_t * inner;
    }
    let mut initial = 0.0;
    for i in 0..g.nodes(0) {
        let x = g.coord(0, i);
        initial += g.quad_weight(i, 0) * rho0.values()[i] * eta(0.0, x);
    }
    (space_time - initial).abs()
}

#[test]
fn weak_form_residual_shrinks_under_refinement() {
    let r1 = weak_form_residual(49, 4e-3);
    let r2 = weak_form_residual(99, 2e-3);
    assert!(r1 < 0.05, "coarse residual {r1}");
    assert!(
        r2 < 0.75 * r1,
        "residual did not shrink: {r1} -> {r2}"
    );
}

#[test]
fn zero_initial_data_gives_zero_run() {
    let g = Grid::line(1.0, 29).unwrap();
    let rho0 = ScalarField::zeros(&g);
    let v = VectorField::from_fn(&g, |x, _| ((x * 3.0).cos(), 0.0));
    let sol = fp_solve(&FpProblem {
        nu: 0.1,
        rho0: &rho0,
        drift: &v,
        t_start: 0.0,
        t_end: 0.1,
        dt: 2e-3,
    })
    .unwrap();
    for (m, s) in sol.mass.iter().zip(sol.states.iter()) {
        assert_eq!(*m, 0.0);
        assert!(s.linf() == 0.0);
    }
}

#[test]
fn mass_equals_l1_for_nonnegative_density() {
    let g = Grid::line(1.0, 49).unwrap();
    let rho0 = common::gaussian_bump(&g, 2.0, 0.6, 0.1);
    let v = VectorField::zeros(&g);
    let sol = fp_solve(&FpProblem {
        nu: 0.02,
        rho0: &rho0,
        drift: &v,
        t_start: 0.0,
        t_end: 0.1,
        dt: 1e-3,
    })
    .unwrap();
    for s in &sol.states {
        assert!((integrate(s) - mfg_core::ops::lp_norm(s, 1.0)).abs() < 1e-12);
        assert!(s.min_value() >= -1e-12);
    }
}
