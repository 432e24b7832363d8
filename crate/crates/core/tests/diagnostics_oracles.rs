//! Oracle tests for the diagnostics: the exit-time identity on converged
//! runs, rate fitting against the spectral prediction, the long-time check,
//! and the regularization-ratio experiment on both kernels.

mod common;

use mfg_core::diagnostics::{LongTimeParams, RegKernel, RegularizationParams};
use mfg_core::{
    check_long_time, check_regularization, check_rho_phi_identity, fit_exponential, fp_solve,
    mfg_solve_finite, FpProblem, Grid, KappaModel, MfgConfig, ScalarField, VectorField,
    VelocityInit,
};
use std::f64::consts::PI;

fn congested_config(n: usize, dt: f64, t_end: f64) -> MfgConfig {
    let grid = Grid::line(1.0, n).unwrap();
    let rho0 = common::gaussian_bump(&grid, 2.0, 0.5, 0.15);
    let psi = ScalarField::zeros(&grid);
    MfgConfig {
        grid,
        nu: 0.1,
        kappa: KappaModel::AffineTruncated {
            kappa0: 1.0,
            r_max: 4.0,
            kappa_min: 0.25,
        },
        rho0,
        psi,
        t_end,
        dt,
        theta: 0.5,
        eps_fp: 1e-6,
        max_outer: 50,
        snapshot_times: vec![0.0, t_end],
        delta_grad: None,
        init: VelocityInit::Uncongested,
        stationary_tol: 1e-12,
        stationary_max_time: 1e4,
    }
}

#[test]
fn exit_time_identity_on_converged_run() {
    let config = congested_config(49, 2e-3, 1.0);
    let sol = mfg_solve_finite(&config).unwrap();
    assert!(sol.converged);
    let report = check_rho_phi_identity(&sol.record, 0.05).unwrap();
    assert!(
        report.passed,
        "identity residual {} vs {}",
        report.value, report.tolerance
    );
}

#[test]
fn fitted_rate_matches_heat_spectral_prediction() {
    let l = 1.0;
    let nu = 0.1;
    let dt = 1e-3;
    let g = Grid::line(l, 99).unwrap();
    let mut rho0 = ScalarField::from_fn(&g, |x, _| (PI * x / l).sin());
    rho0.set_boundary(0.0);
    let v = VectorField::zeros(&g);
    let sol = fp_solve(&FpProblem {
        nu,
        rho0: &rho0,
        drift: &v,
        t_start: 0.0,
        t_end: 2.0,
        dt,
    })
    .unwrap();
    let linf: Vec<f64> = sol.states.iter().map(|s| s.linf()).collect();
    let fit = fit_exponential(&sol.times, &linf, (0.2, 2.0)).unwrap();
    let h = g.spacing(0);
    let lam = (2.0 / (h * h)) * (1.0 - (PI * h / l).cos());
    let discrete_rate = (1.0 + nu * dt * lam).ln() / dt;
    let rel = (fit.alpha / discrete_rate - 1.0).abs();
    assert!(rel < 0.01, "fitted {} vs discrete {discrete_rate}", fit.alpha);
    assert!(fit.r2 > 0.9999);
}

#[test]
fn long_time_check_on_moderate_congested_run() {
    // nu = 0.05, kappa0 = 0.6 slow the decay enough for a clean window.
    // The final datum is the stationary solution itself (inside the
    // uniformly bounded family the sweep allows): with psi = 0 the
    // final-datum layer re-grows ||phi_t - Psi|| just before T/2 at the
    // same spectral rate the signal decays, defeating any horizon.
    let grid = Grid::line(1.0, 49).unwrap();
    let rho0 = common::gaussian_bump(&grid, 1.2, 0.5, 0.2);
    let psi = mfg_core::stationary_solve(&mfg_core::StationaryProblem {
        grid: grid.clone(),
        nu: 0.05,
        kappa0: 0.6,
        tol: 1e-13,
        max_pseudo_time: 1e4,
        dt: None,
    })
    .unwrap();
    let config = MfgConfig {
        grid,
        nu: 0.05,
        kappa: KappaModel::AffineTruncated {
            kappa0: 0.6,
            r_max: 2.0,
            kappa_min: 0.3,
        },
        rho0,
        psi,
        t_end: 8.0,
        dt: 4e-3,
        theta: 0.5,
        eps_fp: 1e-6,
        max_outer: 50,
        snapshot_times: vec![0.0],
        delta_grad: None,
        init: VelocityInit::Uncongested,
        stationary_tol: 1e-13,
        stationary_max_time: 1e4,
    };
    let sol = mfg_solve_finite(&config).unwrap();
    assert!(sol.converged);
    let rho0_linf = config.rho0.linf();
    let params = LongTimeParams {
        window_end: 4.0,
        tol_rho: 1e-2 * rho0_linf,
        tol_phi: 5e-2,
        tol_h1: 5e-1,
        r2_min: 0.9,
    };
    let report = check_long_time(&sol.record, &params).unwrap();
    for c in &report.checks {
        assert!(c.passed, "{} failed: {} vs {}", c.name, c.value, c.tolerance);
    }
    assert!(report.rho_fit.alpha > 0.0);
    assert!(report.phi_fit.alpha > 0.0);
}

#[test]
fn long_time_check_reports_short_horizon() {
    let config = congested_config(29, 4e-3, 0.2);
    let sol = mfg_solve_finite(&config).unwrap();
    let params = LongTimeParams {
        window_end: 4.0,
        tol_rho: 1.0,
        tol_phi: 1.0,
        tol_h1: 1.0,
        r2_min: 0.5,
    };
    assert!(matches!(
        check_long_time(&sol.record, &params),
        Err(mfg_core::Error::HorizonTooShort { .. })
    ));
}

#[test]
fn regularization_with_drift_is_scale_free_on_both_kernels() {
    let g = Grid::line(1.0, 63).unwrap();
    let u0 = common::gaussian_bump(&g, 1.0, 0.45, 0.18);
    let drift = VectorField::from_fn(&g, |x, _| (0.5 * (2.0 * x - 1.0), 0.0));
    let base = RegularizationParams {
        nu: 0.08,
        dt: 0.01,
        p: 1.5,
        t1: 0.5,
        t2: 1.5,
        a: 0.25,
        scales: vec![1.0, 2.0, 4.0, 8.0],
        tol_lin: 1e-10,
        cap: 50.0,
    };
    let fp_report =
        check_regularization(&u0, &RegKernel::FokkerPlanck { drift: &drift }, &base).unwrap();
    assert!(fp_report.all_passed(), "FP spread {}", fp_report.spread);

    let hjb_params = RegularizationParams {
        p: 2.0,
        scales: vec![1.0, 2.0, 4.0, 8.0],
        ..base
    };
    let hjb_report =
        check_regularization(&u0, &RegKernel::LinearizedHjb { drift: &drift }, &hjb_params)
            .unwrap();
    assert!(hjb_report.all_passed(), "HJB spread {}", hjb_report.spread);
    for r in &hjb_report.ratios {
        assert!(r.is_finite() && *r > 0.0);
    }
}

#[test]
fn regularization_ratio_stable_under_dt_halving() {
    let g = Grid::line(1.0, 63).unwrap();
    let u0 = common::gaussian_bump(&g, 1.0, 0.5, 0.2);
    let drift = VectorField::from_fn(&g, |x, _| (0.4 * (2.0 * x - 1.0), 0.0));
    let run = |dt: f64| {
        let params = RegularizationParams {
            nu: 0.08,
            dt,
            p: 1.5,
            t1: 0.5,
            t2: 1.5,
            a: 0.25,
            scales: vec![1.0, 2.0],
            tol_lin: 1e-10,
            cap: 50.0,
        };
        check_regularization(&u0, &RegKernel::FokkerPlanck { drift: &drift }, &params)
            .unwrap()
            .ratios[0]
    };
    let (r1, r2) = (run(0.01), run(0.005));
    let rel = (r1 / r2 - 1.0).abs();
    assert!(rel < 0.2, "dt sensitivity {rel}");
}
