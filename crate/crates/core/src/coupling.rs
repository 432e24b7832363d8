//! The mean field equilibrium as a damped fixed point on the velocity field.
//!
//! One outer iteration maps a drift `V` to the density `rho = FP(V)`, the
//! congestion field `K = kappa(rho)`, the value function `phi = HJB(K)`, the
//! selected velocity `Vtilde = -kappa(rho) grad(phi)/|grad(phi)|` (zero where
//! the gradient is below a configured floor), and the damped update
//! `V <- (1 - theta) V + theta Vtilde`. The damped average stays inside the
//! ball `|V| <= sup kappa` by convexity, mirroring the set the existence
//! proof works on. There is no contraction guarantee, so non-convergence is
//! a flagged result, never an exception.
//!
//! The horizon sweep re-solves the system for a growing list of horizons
//! with one uniformly bounded final datum and reports the discrepancy of
//! `(rho, phi)` on a common early window: its decrease is the numerical
//! witness of the infinite-horizon limit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::{assemble_record, RecordInputs, RunRecord};
use crate::error::{Error, Result};
use crate::fp::{fp_solve, FpProblem};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::hjb::{hjb_solve, stationary_solve, HjbProblem, StationaryProblem};
use crate::kappa::KappaModel;
use crate::ops::{gradient_centered, l1_distance, linf_distance};
use crate::time::{step_count, time_axis};

/// Starting velocity of the outer iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocityInit {
    /// Select from the uncongested value function (`K = kappa(0)`, `rho = 0`).
    Uncongested,
    /// Start from `V = 0`. Useful when the uncongested start is already the
    /// fixed point (constant speed laws) and the damping tail itself is the
    /// object of study.
    Zero,
}

/// Full problem and scheme parameters of one finite-horizon solve.
#[derive(Clone, Debug)]
pub struct MfgConfig {
    pub grid: Grid,
    pub nu: f64,
    pub kappa: KappaModel,
    /// Nonnegative initial density, zero on the boundary.
    pub rho0: ScalarField,
    /// Nonnegative final datum for the value function, zero on the boundary.
    pub psi: ScalarField,
    /// Horizon `T`.
    pub t_end: f64,
    pub dt: f64,
    /// Damping weight in `(0, 1]`.
    pub theta: f64,
    /// Fixed-point tolerance on the mixed residual
    /// `max_t ||dV||_inf + max_t ||d rho||_L1`.
    pub eps_fp: f64,
    pub max_outer: usize,
    pub snapshot_times: Vec<f64>,
    /// Gradient floor below which the selected velocity is zero;
    /// `None` picks `1e-10 * sup(kappa) / min(h)`.
    pub delta_grad: Option<f64>,
    pub init: VelocityInit,
    /// Stopping tolerance of the stationary solve backing the `phi - Psi`
    /// record columns.
    pub stationary_tol: f64,
    pub stationary_max_time: f64,
}

impl MfgConfig {
    pub fn validate(&self) -> Result<usize> {
        self.kappa.validate()?;
        if !(self.nu > 0.0) {
            return Err(Error::Invalid {
                what: "nu",
                why: format!("must be > 0, got {}", self.nu),
            });
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Invalid {
                what: "theta",
                why: format!("must lie in (0, 1], got {}", self.theta),
            });
        }
        if !(self.eps_fp > 0.0) {
            return Err(Error::Invalid {
                what: "eps_fp",
                why: format!("must be > 0, got {}", self.eps_fp),
            });
        }
        if self.rho0.grid() != &self.grid || self.psi.grid() != &self.grid {
            return Err(Error::GridMismatch {
                context: "MfgConfig data fields",
            });
        }
        step_count(0.0, self.t_end, self.dt)
    }

    pub fn gradient_floor(&self) -> f64 {
        self.delta_grad
            .unwrap_or(1e-10 * self.kappa.sup() / self.grid.min_spacing())
    }

    fn stationary_problem(&self) -> StationaryProblem {
        StationaryProblem {
            grid: self.grid.clone(),
            nu: self.nu,
            kappa0: self.kappa.at_zero(),
            tol: self.stationary_tol,
            max_pseudo_time: self.stationary_max_time,
            dt: None,
        }
    }
}

/// Converged (or flagged) equilibrium: full state trajectories plus the
/// serialization-facing record. The returned velocity is the *selected*
/// field of the last iteration, which satisfies the pointwise conditions
/// `|V| <= kappa(rho)` and `V . grad phi = -kappa(rho) |grad phi|` (up to
/// the gradient floor) by construction.
#[derive(Clone, Debug)]
pub struct MfgSolution {
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub times: Vec<f64>,
    pub rho: Vec<ScalarField>,
    pub phi: Vec<ScalarField>,
    pub v: Vec<VectorField>,
    pub record: RunRecord,
}

/// Pointwise optimal drift: `-kappa(rho) grad(phi)/|grad(phi)|` where the
/// gradient magnitude exceeds `floor`, zero elsewhere. Guarantees
/// `|V| <= kappa(rho)` nodewise.
pub fn select_velocity(
    grad_phi: &VectorField,
    rho: &ScalarField,
    kappa: &KappaModel,
    floor: f64,
) -> VectorField {
    let g = grad_phi.grid().clone();
    let mut v = VectorField::zeros(&g);
    for id in 0..g.node_count() {
        let mag = grad_phi.magnitude_at(id);
        if mag > floor {
            let speed = kappa.eval(rho.values()[id]);
            for axis in 0..g.dim() {
                v.component_mut(axis)[id] = -speed * grad_phi.component(axis)[id] / mag;
            }
        }
    }
    v
}

fn uncongested_velocity(config: &MfgConfig, steps: usize) -> Result<Vec<VectorField>> {
    let k0 = ScalarField::constant(&config.grid, config.kappa.at_zero());
    let hjb = hjb_solve(&HjbProblem {
        nu: config.nu,
        speed: &k0,
        psi: &config.psi,
        t_end: config.t_end,
        dt: config.dt,
    })?;
    let zero_density = ScalarField::zeros(&config.grid);
    let floor = config.gradient_floor();
    Ok((0..=steps)
        .map(|k| {
            select_velocity(
                &gradient_centered(&hjb.states[k]),
                &zero_density,
                &config.kappa,
                floor,
            )
        })
        .collect())
}

/// Solve the finite-horizon system by damped fixed-point iteration.
///
/// The residual after each iteration is
/// `max_t ||V_new - V_old||_inf + max_t ||rho_new - rho_old||_L1`
/// (the density term is skipped on the first iteration, which has no
/// predecessor). Reaching `eps_fp` sets `converged`; running out of
/// iterations returns the last iterate flagged unconverged.
pub fn mfg_solve_finite(config: &MfgConfig) -> Result<MfgSolution> {
    let steps = config.validate()?;
    if config.max_outer == 0 {
        return Err(Error::NotAttempted);
    }
    let times = time_axis(0.0, config.dt, steps);
    let floor = config.gradient_floor();

    let mut v: Vec<VectorField> = match config.init {
        VelocityInit::Uncongested => uncongested_velocity(config, steps)?,
        VelocityInit::Zero => vec![VectorField::zeros(&config.grid); steps + 1],
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    // (rho, phi, vtilde, per-time residual) of the last completed iteration
    let mut last: Option<(
        Vec<ScalarField>,
        Vec<ScalarField>,
        Vec<VectorField>,
        Vec<f64>,
    )> = None;

    for iter in 1..=config.max_outer {
        let fp = fp_solve(&FpProblem {
            nu: config.nu,
            rho0: &config.rho0,
            drift: &v,
            t_start: 0.0,
            t_end: config.t_end,
            dt: config.dt,
        })?;
        let speed: Vec<ScalarField> = fp.states.iter().map(|r| config.kappa.eval_field(r)).collect();
        let hjb = hjb_solve(&HjbProblem {
            nu: config.nu,
            speed: &speed,
            psi: &config.psi,
            t_end: config.t_end,
            dt: config.dt,
        })?;
        let vtilde: Vec<VectorField> = (0..=steps)
            .map(|k| {
                select_velocity(
                    &gradient_centered(&hjb.states[k]),
                    &fp.states[k],
                    &config.kappa,
                    floor,
                )
            })
            .collect();

        let mut per_time = vec![0.0; steps + 1];
        let mut res_v: f64 = 0.0;
        for k in 0..=steps {
            let mut v_new = v[k].clone();
            v_new.blend(&vtilde[k], config.theta)?;
            let d = v_new.linf_distance(&v[k])?;
            per_time[k] = d;
            res_v = res_v.max(d);
            v[k] = v_new;
        }
        let mut res_rho: f64 = 0.0;
        if let Some((prev_rho, _, _, _)) = &last {
            for k in 0..=steps {
                let d = l1_distance(&fp.states[k], &prev_rho[k])?;
                per_time[k] += d;
                res_rho = res_rho.max(d);
            }
        }
        let residual = res_v + res_rho;
        history.push(residual);
        iterations = iter;
        last = Some((fp.states, hjb.states, vtilde, per_time));
        if residual <= config.eps_fp {
            converged = true;
            break;
        }
    }

    let (rho, phi, vtilde, per_time) = last.expect("at least one iteration ran");
    let psi_star = stationary_solve(&config.stationary_problem())?;
    let record = assemble_record(&RecordInputs {
        times: &times,
        rho: Some(&rho),
        phi: Some(&phi),
        v: Some(&vtilde),
        psi_star: Some(&psi_star),
        residual: Some(&per_time),
        snapshot_times: &config.snapshot_times,
        config_hash: 0,
    })?;
    Ok(MfgSolution {
        converged,
        iterations,
        residual_history: history,
        times,
        rho,
        phi,
        v: vtilde,
        record,
    })
}

/// Early-window discrepancy between two consecutive horizons of a sweep.
#[derive(Clone, Copy, Debug)]
pub struct TailDiscrepancy {
    pub horizon_a: f64,
    pub horizon_b: f64,
    /// Common window `[0, window_end]` on which the fields were compared.
    pub window_end: f64,
    pub rho_linf: f64,
    pub phi_linf: f64,
}

/// Result of a horizon sweep: per-horizon solutions plus consecutive-pair
/// discrepancies on the common early window `[0, horizons[0] / 2]`.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub horizons: Vec<f64>,
    pub solutions: Vec<MfgSolution>,
    pub tail: Vec<TailDiscrepancy>,
}

/// Solve the system for each horizon in the increasing list, all with the
/// configured (uniformly bounded) final datum, and compare consecutive
/// solutions on the shared early window.
pub fn mfg_solve_horizon_sweep(config: &MfgConfig, horizons: &[f64]) -> Result<SweepResult> {
    if horizons.is_empty() {
        return Err(Error::Invalid {
            what: "horizons",
            why: format!("empty horizon list"),
        });
    }
    for pair in horizons.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::Invalid {
                what: "horizons",
                why: format!("must be strictly increasing, got {} then {}", pair[0], pair[1]),
            });
        }
    }
    let mut solutions = Vec::with_capacity(horizons.len());
    for &t_end in horizons {
        let mut sub = config.clone();
        sub.t_end = t_end;
        sub.snapshot_times = config
            .snapshot_times
            .iter()
            .copied()
            .filter(|&t| t <= t_end + 1e-12)
            .collect();
        solutions.push(mfg_solve_finite(&sub)?);
    }

    let window_end = horizons[0] / 2.0;
    let mut tail = Vec::new();
    for w in 0..horizons.len().saturating_sub(1) {
        let (a, b) = (&solutions[w], &solutions[w + 1]);
        let mut rho_d: f64 = 0.0;
        let mut phi_d: f64 = 0.0;
        for (k, &t) in a.times.iter().enumerate() {
            if t > window_end + 1e-12 {
                break;
            }
            rho_d = rho_d.max(linf_distance(&a.rho[k], &b.rho[k])?);
            phi_d = phi_d.max(linf_distance(&a.phi[k], &b.phi[k])?);
        }
        tail.push(TailDiscrepancy {
            horizon_a: horizons[w],
            horizon_b: horizons[w + 1],
            window_end,
            rho_linf: rho_d,
            phi_linf: phi_d,
        });
    }
    Ok(SweepResult {
        horizons: horizons.to_vec(),
        solutions,
        tail,
    })
}
