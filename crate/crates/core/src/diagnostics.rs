//! Verification of the structural properties the coupled system satisfies:
//! the exit-time identity `d/dt int(rho phi) = -int(rho)`, exponential
//! long-time convergence of `rho` to 0 and `phi` to the stationary solution,
//! H1 convergence of the value function, and the parabolic `L^p -> L^inf`
//! regularization ratios.
//!
//! Everything here is a pure function of a [`RunRecord`] (or of a small
//! kernel re-run for the regularization experiment), so re-running
//! diagnostics on a stored record is bit-identical.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fp::fp_step;
use crate::grid::{ScalarField, VectorField};
use crate::linsolve::solve_shifted_laplacian;
use crate::ops::{discrete_norms, gradient_upwind, inner_product, integrate, lp_norm};
use crate::time::nearest_index;

/// FNV-1a hash, used to stamp records with the configuration they came from
/// (stable across platforms and releases, unlike the std hasher).
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Field snapshot at one recorded time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub rho: ScalarField,
    pub phi: ScalarField,
    pub v: VectorField,
}

/// Time series and snapshots produced by a solve. `phierr_*` columns measure
/// `phi_t - Psi` against the stationary solution; standalone density runs
/// leave them (and `coupling`) at zero.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub times: Vec<f64>,
    /// `m(t) = int rho`.
    pub mass: Vec<f64>,
    /// `c(t) = int rho phi`.
    pub coupling: Vec<f64>,
    pub rho_l1: Vec<f64>,
    pub rho_l2: Vec<f64>,
    pub rho_linf: Vec<f64>,
    pub phierr_linf: Vec<f64>,
    pub phierr_h1: Vec<f64>,
    /// Per-time residual of the final outer iteration (zero for standalone
    /// single-equation runs); its maximum is the reported final residual.
    pub residual: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub config_hash: u64,
}

/// Everything needed to assemble a [`RunRecord`] from solver output.
pub struct RecordInputs<'a> {
    pub times: &'a [f64],
    pub rho: Option<&'a [ScalarField]>,
    pub phi: Option<&'a [ScalarField]>,
    pub v: Option<&'a [VectorField]>,
    /// Stationary solution for the `phierr` columns.
    pub psi_star: Option<&'a ScalarField>,
    pub residual: Option<&'a [f64]>,
    pub snapshot_times: &'a [f64],
    pub config_hash: u64,
}

/// Build the time series and extract snapshots at the requested times
/// (snapped to the nearest step; out-of-span times are an error, so no
/// requested snapshot is silently dropped).
pub fn assemble_record(inputs: &RecordInputs) -> Result<RunRecord> {
    let n = inputs.times.len();
    let check_len = |len: usize, what: &'static str| -> Result<()> {
        if len != n {
            return Err(Error::Invalid {
                what,
                why: format!("length {len} does not match {n} recorded times"),
            });
        }
        Ok(())
    };
    if let Some(r) = inputs.rho {
        check_len(r.len(), "rho states")?;
    }
    if let Some(p) = inputs.phi {
        check_len(p.len(), "phi states")?;
    }
    if let Some(v) = inputs.v {
        check_len(v.len(), "velocity states")?;
    }
    if let Some(res) = inputs.residual {
        check_len(res.len(), "residual series")?;
    }

    let mut record = RunRecord {
        times: inputs.times.to_vec(),
        mass: vec![0.0; n],
        coupling: vec![0.0; n],
        rho_l1: vec![0.0; n],
        rho_l2: vec![0.0; n],
        rho_linf: vec![0.0; n],
        phierr_linf: vec![0.0; n],
        phierr_h1: vec![0.0; n],
        residual: inputs
            .residual
            .map(|r| r.to_vec())
            .unwrap_or_else(|| vec![0.0; n]),
        snapshots: Vec::new(),
        config_hash: inputs.config_hash,
    };

    for k in 0..n {
        if let Some(rho) = inputs.rho {
            let norms = discrete_norms(&rho[k]);
            record.mass[k] = integrate(&rho[k]);
            record.rho_l1[k] = norms.l1;
            record.rho_l2[k] = norms.l2;
            record.rho_linf[k] = norms.linf;
            if let Some(phi) = inputs.phi {
                record.coupling[k] = inner_product(&rho[k], &phi[k])?;
            }
        }
        if let (Some(phi), Some(psi_star)) = (inputs.phi, inputs.psi_star) {
            let mut err = phi[k].clone();
            err.add_scaled(psi_star, -1.0)?;
            let norms = discrete_norms(&err);
            record.phierr_linf[k] = norms.linf;
            record.phierr_h1[k] = norms.h1_seminorm;
        }
    }

    for &t in inputs.snapshot_times {
        let k = nearest_index(inputs.times, t)?;
        let grid_of = |f: Option<&[ScalarField]>| f.map(|s| s[k].grid().clone());
        let grid = grid_of(inputs.rho)
            .or_else(|| grid_of(inputs.phi))
            .ok_or(Error::Invalid {
                what: "snapshot",
                why: String::from("no field states to snapshot"),
            })?;
        record.snapshots.push(Snapshot {
            time: t,
            rho: inputs
                .rho
                .map(|s| s[k].clone())
                .unwrap_or_else(|| ScalarField::zeros(&grid)),
            phi: inputs
                .phi
                .map(|s| s[k].clone())
                .unwrap_or_else(|| ScalarField::zeros(&grid)),
            v: inputs
                .v
                .map(|s| s[k].clone())
                .unwrap_or_else(|| VectorField::zeros(&grid)),
        });
    }
    Ok(record)
}

/// Outcome of one named check; serialized by the CLI as
/// `CHECK <name> PASS|FAIL <value> <tolerance>`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckReport {
    fn bounded(name: &str, value: f64, tolerance: f64) -> Self {
        CheckReport {
            name: String::from(name),
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }
}

/// Exit-time identity: the time derivative of `c(t) = int rho phi` equals
/// `-m(t)`. Checks `max_t |c'(t) + m(t)| <= tol (1 + m(0))` with a centered
/// difference on the recorded series.
pub fn check_rho_phi_identity(record: &RunRecord, tol: f64) -> Result<CheckReport> {
    let n = record.times.len();
    if n < 3 {
        return Err(Error::Series {
            why: format!("need at least 3 recorded times, got {n}"),
        });
    }
    let mut worst: f64 = 0.0;
    for j in 1..n - 1 {
        let dt2 = record.times[j + 1] - record.times[j - 1];
        let cdot = (record.coupling[j + 1] - record.coupling[j - 1]) / dt2;
        worst = worst.max((cdot + record.mass[j]).abs());
    }
    Ok(CheckReport::bounded(
        "rho_phi_identity",
        worst,
        tol * (1.0 + record.mass[0]),
    ))
}

/// Exponential fit `y ~ prefactor * exp(-alpha t)` by least squares on
/// `log y` over a time window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    /// Decay rate (positive means the series decays).
    pub alpha: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    /// Coefficient of determination of the log-linear fit, clamped to [0, 1].
    pub r2: f64,
}

/// Least-squares line on `log(series)` over `window` (inclusive). Errors on
/// non-positive entries inside the window or fewer than 3 samples.
pub fn fit_exponential(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(Error::Series {
            why: String::from("times and values differ in length"),
        });
    }
    let mut ts = Vec::new();
    let mut zs = Vec::new();
    for (t, y) in times.iter().zip(values.iter()) {
        if *t < window.0 || *t > window.1 {
            continue;
        }
        if !(*y > 0.0) {
            return Err(Error::Series {
                why: format!("non-positive entry {y} at t = {t} inside the fit window"),
            });
        }
        ts.push(*t);
        zs.push(libm::log(*y));
    }
    let n = ts.len();
    if n < 3 {
        return Err(Error::Series {
            why: format!("need at least 3 samples in the fit window, got {n}"),
        });
    }
    let nf = n as f64;
    let tbar = ts.iter().sum::<f64>() / nf;
    let zbar = zs.iter().sum::<f64>() / nf;
    let mut stt = 0.0;
    let mut stz = 0.0;
    for (t, z) in ts.iter().zip(zs.iter()) {
        stt += (t - tbar) * (t - tbar);
        stz += (t - tbar) * (z - zbar);
    }
    if stt == 0.0 {
        return Err(Error::Series {
            why: String::from("degenerate fit window (all samples at one time)"),
        });
    }
    let slope = stz / stt;
    let intercept = zbar - slope * tbar;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, z) in ts.iter().zip(zs.iter()) {
        let fit = intercept + slope * t;
        ss_res += (z - fit) * (z - fit);
        ss_tot += (z - zbar) * (z - zbar);
    }
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res < 1e-24 {
        1.0
    } else {
        0.0
    };
    Ok(RateFit {
        alpha: -slope,
        prefactor: libm::exp(intercept),
        window,
        r2,
    })
}

/// Trailing fit window: the last 50% of the times at which the series still
/// exceeds `10 * eps * initial`, avoiding both the transient and the
/// round-off floor.
pub fn trailing_window(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if times.is_empty() || values.is_empty() || !(values[0] > 0.0) {
        return Err(Error::Series {
            why: String::from("trailing window needs a positive initial value"),
        });
    }
    let threshold = 10.0 * f64::EPSILON * values[0];
    let live: Vec<usize> = (0..times.len()).filter(|&i| values[i] > threshold).collect();
    if live.len() < 6 {
        return Err(Error::Series {
            why: format!("only {} samples above the round-off floor", live.len()),
        });
    }
    let start = live[live.len() / 2];
    let end = live[live.len() - 1];
    Ok((times[start], times[end]))
}

/// Tolerances and window for the long-time convergence check.
#[derive(Clone, Copy, Debug)]
pub struct LongTimeParams {
    /// End of the analysis window (typically `T/2`: past it the final-datum
    /// layer of the finite-horizon solve takes over).
    pub window_end: f64,
    /// Bound on `||rho_t||_inf` at the window end.
    pub tol_rho: f64,
    /// Bound on `||phi_t - Psi||_inf` at the window end.
    pub tol_phi: f64,
    /// Bound on the H1 seminorm of `phi_t - Psi` at the window end.
    pub tol_h1: f64,
    /// Minimum r-squared for the trailing-window rate fits.
    pub r2_min: f64,
}

/// Long-time report: level checks at the window end, eventual-monotonicity
/// checks on the last quarter, and trailing-window rate fits. Fits are
/// `None` for series that already sit below their tolerance at t = 0
/// (nothing decays, the check passes trivially).
#[derive(Clone, Debug)]
pub struct LongTimeReport {
    pub checks: Vec<CheckReport>,
    pub rho_fit: Option<RateFit>,
    pub phi_fit: Option<RateFit>,
    /// True when the window is shorter than three fitted e-folding times;
    /// the checks still ran but cover little of the asymptotic regime.
    pub horizon_marginal: bool,
}

impl LongTimeReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Relative slack for the eventual-monotonicity checks.
const MONOTONE_SLACK: f64 = 1e-9;

fn monotone_uptick(times: &[f64], values: &[f64], from: f64, to: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 1..times.len() {
        if times[j - 1] < from || times[j] > to {
            continue;
        }
        let limit = values[j - 1] * (1.0 + MONOTONE_SLACK);
        if values[j] > limit {
            let scale = values[j - 1].abs().max(1e-300);
            worst = worst.max((values[j] - limit) / scale);
        }
    }
    worst
}

/// Verify the long-time behavior on `[0, window_end]`: both deviations
/// reach their tolerance at the window end, decrease monotonically over the
/// last quarter, and fit a positive exponential rate on the trailing window.
pub fn check_long_time(record: &RunRecord, params: &LongTimeParams) -> Result<LongTimeReport> {
    let t_final = *record.times.last().ok_or(Error::Series {
        why: String::from("empty record"),
    })?;
    if t_final + 1e-12 < params.window_end {
        return Err(Error::HorizonTooShort {
            have: t_final,
            need: params.window_end,
        });
    }
    let end = nearest_index(&record.times, params.window_end)?;
    let times = &record.times[..=end];
    let rho = &record.rho_linf[..=end];
    let phierr = &record.phierr_linf[..=end];
    let h1 = &record.phierr_h1[..=end];

    let mut checks = Vec::new();
    checks.push(CheckReport::bounded(
        "long_time_rho_linf",
        rho[end],
        params.tol_rho,
    ));
    checks.push(CheckReport::bounded(
        "long_time_phierr_linf",
        phierr[end],
        params.tol_phi,
    ));
    checks.push(CheckReport::bounded(
        "long_time_phierr_h1",
        h1[end],
        params.tol_h1,
    ));

    // a series that starts below its own tolerance has nothing to decay:
    // level checks pass trivially and rate/monotone checks are vacuous
    let quarter = 0.75 * params.window_end;
    let mut fit_series = |label: &str,
                          values: &[f64],
                          tol_level: f64,
                          checks: &mut Vec<CheckReport>|
     -> Result<Option<RateFit>> {
        if !(values[0] > tol_level) {
            return Ok(None);
        }
        checks.push(CheckReport::bounded(
            &format!("long_time_{label}_monotone"),
            monotone_uptick(times, values, quarter, params.window_end),
            0.0,
        ));
        let fit = fit_exponential(times, values, trailing_window(times, values)?)?;
        checks.push(CheckReport {
            name: format!("long_time_{label}_rate_positive"),
            passed: fit.alpha > 0.0,
            value: fit.alpha,
            tolerance: 0.0,
        });
        checks.push(CheckReport {
            name: format!("long_time_{label}_rate_r2"),
            passed: fit.r2 >= params.r2_min,
            value: fit.r2,
            tolerance: params.r2_min,
        });
        Ok(Some(fit))
    };
    let rho_fit = fit_series("rho", rho, params.tol_rho, &mut checks)?;
    let phi_fit = fit_series("phierr", phierr, params.tol_phi, &mut checks)?;
    if h1[0] > params.tol_h1 {
        checks.push(CheckReport::bounded(
            "long_time_h1_monotone",
            monotone_uptick(times, h1, quarter, params.window_end),
            0.0,
        ));
    }

    let slowest = match (&rho_fit, &phi_fit) {
        (Some(a), Some(b)) => Some(a.alpha.min(b.alpha)),
        (Some(a), None) => Some(a.alpha),
        (None, Some(b)) => Some(b.alpha),
        (None, None) => None,
    };
    let horizon_marginal = match slowest {
        Some(s) => !(s > 0.0) || params.window_end * s < 3.0,
        None => false,
    };
    Ok(LongTimeReport {
        checks,
        rho_fit,
        phi_fit,
        horizon_marginal,
    })
}

/// Kernel choice for the regularization-ratio experiment.
pub enum RegKernel<'a> {
    /// Conservative form `d_t u - nu Lap u + div(u V) = 0` (the density
    /// kernel); requires nonnegative data.
    FokkerPlanck { drift: &'a VectorField },
    /// Advective form `d_t u - nu Lap u + g . grad u = 0` (the linearized
    /// value-function kernel with zero source).
    LinearizedHjb { drift: &'a VectorField },
}

/// Parameters of the regularization-ratio experiment.
pub struct RegularizationParams {
    pub nu: f64,
    pub dt: f64,
    /// Initial-norm exponent, `> 1`.
    pub p: f64,
    pub t1: f64,
    pub t2: f64,
    /// Window-shape constant: requires `a < t2 - t1 < 1/a`.
    pub a: f64,
    /// Scaling family applied to the base datum.
    pub scales: Vec<f64>,
    /// Relative spread allowed across the family (linearity makes the ratio
    /// scale-free, so this is a round-off budget).
    pub tol_lin: f64,
    /// Cap on the observed ratio, recorded as the empirical constant.
    pub cap: f64,
}

/// Result of the regularization experiment: one ratio
/// `R(s) = ||u(t2)||_inf / ||u(t1)||_p` per scale.
#[derive(Clone, Debug)]
pub struct RegularizationReport {
    pub scales: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `max R / min R - 1`.
    pub spread: f64,
    pub checks: Vec<CheckReport>,
}

impl RegularizationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Run the scaling family through the chosen parabolic kernel and check that
/// the smoothing ratio is scale-free (linearity) and capped.
pub fn check_regularization(
    u0_base: &ScalarField,
    kernel: &RegKernel,
    params: &RegularizationParams,
) -> Result<RegularizationReport> {
    if !(params.p > 1.0) {
        return Err(Error::Invalid {
            what: "p",
            why: format!("need p > 1, got {}", params.p),
        });
    }
    if !(params.a > 0.0 && params.a < 1.0) {
        return Err(Error::Invalid {
            what: "a",
            why: format!("need 0 < a < 1, got {}", params.a),
        });
    }
    let gap = params.t2 - params.t1;
    if !(gap > params.a && gap < 1.0 / params.a) {
        return Err(Error::Invalid {
            what: "time window",
            why: format!(
                "need a < t2 - t1 < 1/a, got t2 - t1 = {gap} with a = {}",
                params.a
            ),
        });
    }
    if params.scales.is_empty() {
        return Err(Error::Invalid {
            what: "scales",
            why: String::from("empty scaling family"),
        });
    }
    if !(lp_norm(u0_base, params.p) > 0.0) {
        return Err(Error::Series {
            why: String::from("zero initial datum"),
        });
    }
    let k1 = crate::time::step_count(0.0, params.t1, params.dt)?;
    let k2 = crate::time::step_count(0.0, params.t2, params.dt)?;

    let mut ratios = Vec::with_capacity(params.scales.len());
    for &s in &params.scales {
        let mut u = u0_base.clone();
        u.scale(s);
        let mut norm_t1 = 0.0;
        for k in 0..k2 {
            if k == k1 {
                norm_t1 = lp_norm(&u, params.p);
            }
            u = kernel_step(kernel, &u, params.nu, params.dt)?;
        }
        if k1 == k2 {
            norm_t1 = lp_norm(&u, params.p);
        }
        let norm_t2 = u.linf();
        if !(norm_t1 > 0.0) {
            return Err(Error::Series {
                why: String::from("vanishing L^p norm at t1"),
            });
        }
        ratios.push(norm_t2 / norm_t1);
    }
    let max_r = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_r = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max_r / min_r - 1.0;
    let checks = vec![
        CheckReport::bounded("regularization_linearity", spread, params.tol_lin),
        CheckReport::bounded("regularization_cap", max_r, params.cap),
    ];
    Ok(RegularizationReport {
        scales: params.scales.clone(),
        ratios,
        spread,
        checks,
    })
}

fn kernel_step(
    kernel: &RegKernel,
    u: &ScalarField,
    nu: f64,
    dt: f64,
) -> Result<ScalarField> {
    match kernel {
        RegKernel::FokkerPlanck { drift } => fp_step(u, drift, nu, dt),
        RegKernel::LinearizedHjb { drift } => {
            let g = u.grid().clone();
            let mut ratio: f64 = 0.0;
            let ny = if g.dim() == 2 { g.nodes(1) } else { 1 };
            for i in 0..g.nodes(0) {
                for j in 0..ny {
                    let id = g.idx(i, j);
                    let mut sum = 0.0;
                    for axis in 0..g.dim() {
                        sum += drift.component(axis)[id].abs() / g.spacing(axis);
                    }
                    ratio = ratio.max(dt * sum);
                }
            }
            if ratio > 1.0 + 1e-12 {
                return Err(Error::Cfl { ratio });
            }
            let grad = gradient_upwind(u, drift)?;
            let mut star = u.clone();
            {
                let s = star.values_mut();
                for i in 1..g.nodes(0) - 1 {
                    for j in 0..ny {
                        if g.dim() == 2 && (j == 0 || j == ny - 1) {
                            continue;
                        }
                        let id = g.idx(i, j);
                        let mut adv = 0.0;
                        for axis in 0..g.dim() {
                            adv += drift.component(axis)[id] * grad.component(axis)[id];
                        }
                        s[id] -= dt * adv;
                    }
                }
            }
            star.set_boundary(0.0);
            solve_shifted_laplacian(&g, 1.0, nu * dt, &star)
        }
    }
}
