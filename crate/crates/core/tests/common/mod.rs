//! Shared analytic oracles for the integration tests.
#![allow(dead_code)]

use mfg_core::{Grid, ScalarField};

/// Closed-form stationary exit time on the interval `(0, l)`:
/// solves `-nu Psi'' + kappa0 |Psi'| = 1`, `Psi(0) = Psi(l) = 0`, symmetric
/// about `l/2` with `Psi'(l/2) = 0`. On `[0, l/2]`:
/// `Psi(x) = x/kappa0 - (nu/kappa0^2) (exp((kappa0/nu)(x - l/2)) - exp(-(kappa0/nu) l/2))`,
/// mirrored on the right half. `psi_formula_satisfies_ode` below checks the
/// formula against the ODE before any test trusts it.
pub fn closed_form_psi(l: f64, nu: f64, kappa0: f64, x: f64) -> f64 {
    let xl = if x <= l / 2.0 { x } else { l - x };
    let b = kappa0 / nu;
    xl / kappa0 - (nu / (kappa0 * kappa0)) * ((b * (xl - l / 2.0)).exp() - (-b * l / 2.0).exp())
}

/// Residual of the stationary ODE evaluated on the analytic formula with
/// fine centered differences, skipping a neighborhood of the `C^2` kink at
/// `l/2` (third derivative jumps there) and returning the max residual.
pub fn psi_formula_ode_residual(l: f64, nu: f64, kappa0: f64, n: usize) -> f64 {
    let h = l / (n + 1) as f64;
    let mut worst: f64 = 0.0;
    for i in 1..=n {
        let x = i as f64 * h;
        if (x - l / 2.0).abs() < 4.0 * h {
            continue;
        }
        let pm = closed_form_psi(l, nu, kappa0, x - h);
        let p0 = closed_form_psi(l, nu, kappa0, x);
        let pp = closed_form_psi(l, nu, kappa0, x + h);
        let second = (pm - 2.0 * p0 + pp) / (h * h);
        let first = (pp - pm) / (2.0 * h);
        worst = worst.max((-nu * second + kappa0 * first.abs() - 1.0).abs());
    }
    worst
}

/// Truncated Fourier-series value of the torsion function
/// `-nu Lap Phi = 1` on the square `(0, l)^2` at the center. Terms with odd
/// `m, n` up to `max_index`.
pub fn torsion_square_center_series(l: f64, nu: f64, max_index: usize) -> f64 {
    use std::f64::consts::PI;
    let mut sum = 0.0;
    let mut m = 1usize;
    while m <= max_index {
        let mut n = 1usize;
        while n <= max_index {
            let sign_m = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let sign_n = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let mn = (m * n) as f64;
            let m2n2 = (m * m + n * n) as f64;
            sum += 16.0 / (PI.powi(4) * mn * m2n2) * sign_m * sign_n;
            n += 2;
        }
        m += 2;
    }
    sum * l * l / nu
}

/// Smooth nonnegative bump with zero boundary values:
/// `amp * sin(pi x / l)^2` shifted to be concentrated near `center_frac`.
pub fn gaussian_bump(grid: &Grid, amp: f64, center_frac: f64, width_frac: f64) -> ScalarField {
    let lx = grid.extent(0);
    let ly = if grid.dim() == 2 { grid.extent(1) } else { 0.0 };
    let mut f = ScalarField::from_fn(grid, |x, y| {
        let mut arg = ((x - center_frac * lx) / (width_frac * lx)).powi(2);
        if grid.dim() == 2 {
            arg += ((y - center_frac * ly) / (width_frac * ly)).powi(2);
        }
        amp * (-arg).exp()
    });
    f.set_boundary(0.0);
    f
}

pub fn linf_between(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values().iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
