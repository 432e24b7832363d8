//! Sectioned key=value configuration: parsing, validation, canonical
//! serialization, and construction of the core problem objects.
//!
//! The file format is TOML with the sections `[grid]`, `[physics]`,
//! `[kappa]`, `[data]`, `[scheme]`, `[diagnostics]`. Every field has a
//! documented default, unknown keys are rejected, and
//! `parse(serialize(parse(x)))` equals `parse(x)`.

use mfg_core::{Grid, KappaModel, MfgConfig, ScalarField, VectorField, VelocityInit};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub kappa: KappaSection,
    pub data: DataSection,
    pub scheme: SchemeSection,
    pub diagnostics: DiagnosticsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// 1 or 2.
    pub dim: usize,
    pub lx: f64,
    pub nx: usize,
    /// Second axis, used when `dim = 2`.
    pub ly: f64,
    pub ny: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 1,
            lx: 1.0,
            nx: 99,
            ly: 1.0,
            ny: 99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub nu: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection { nu: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KappaSection {
    /// "constant", "affine" (truncated), or "rational".
    pub kind: String,
    pub kappa0: f64,
    /// Density at which the affine law would reach zero.
    pub r_max: f64,
    /// Positive floor of the affine law.
    pub kappa_min: f64,
    /// Slope of the rational law `kappa0 / (1 + c r)`.
    pub c: f64,
}

impl Default for KappaSection {
    fn default() -> Self {
        KappaSection {
            kind: "constant".into(),
            kappa0: 1.0,
            r_max: 4.0,
            kappa_min: 0.25,
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Initial density profile: "zero", "gaussian", or "eigenmode".
    pub rho0: String,
    pub rho0_amplitude: f64,
    /// Center as a fraction of the axis length (each axis).
    pub rho0_center: f64,
    /// Width as a fraction of the axis length.
    pub rho0_width: f64,
    /// Final datum: "zero", "stationary", or "torsion-plus".
    pub psi: String,
    /// Interior offset M for "torsion-plus".
    pub psi_offset: f64,
    /// Drift for standalone density runs: "zero" or "constant".
    pub drift: String,
    pub drift_vx: f64,
    pub drift_vy: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            rho0: "gaussian".into(),
            rho0_amplitude: 2.0,
            rho0_center: 0.5,
            rho0_width: 0.15,
            psi: "zero".into(),
            psi_offset: 1.0,
            drift: "zero".into(),
            drift_vx: 0.0,
            drift_vy: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    pub t_end: f64,
    pub dt: f64,
    /// Damping weight in (0, 1].
    pub theta: f64,
    /// Fixed-point residual tolerance.
    pub eps_fp: f64,
    pub max_outer: usize,
    pub snapshot_times: Vec<f64>,
    /// "uncongested" (default) or "zero".
    pub init: String,
    /// Gradient floor for the velocity selection; 0 picks the default
    /// `1e-10 sup(kappa) / min(h)`.
    pub delta_grad: f64,
    /// Horizon list for the sweep subcommand.
    pub horizons: Vec<f64>,
    pub stationary_tol: f64,
    pub stationary_max_time: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            t_end: 2.0,
            dt: 1e-3,
            theta: 0.5,
            eps_fp: 1e-6,
            max_outer: 50,
            snapshot_times: vec![0.0, 1.0, 2.0],
            init: "uncongested".into(),
            delta_grad: 0.0,
            horizons: vec![4.0, 8.0, 16.0],
            stationary_tol: 1e-13,
            stationary_max_time: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    /// Which checks `verify` runs, in order. Known names:
    /// "rho_phi_identity", "def31", "long_time", "regularization".
    pub checks: Vec<String>,
    pub identity_tol: f64,
    /// Long-time window end as a fraction of the horizon.
    pub long_time_window_frac: f64,
    /// `||rho||_inf` bound at the window end, relative to `||rho0||_inf`.
    pub long_time_tol_rho_rel: f64,
    /// `||phi - Psi||_inf` bound at the window end, relative to `||Psi||_inf`.
    pub long_time_tol_phi_rel: f64,
    /// H1 bound = this factor times the L-infinity bound.
    pub long_time_h1_factor: f64,
    pub long_time_r2_min: f64,
    pub reg_p_fp: f64,
    pub reg_p_hjb: f64,
    pub reg_dt: f64,
    pub reg_t1: f64,
    pub reg_t2: f64,
    pub reg_a: f64,
    pub reg_scales: Vec<f64>,
    pub reg_tol_lin: f64,
    pub reg_cap: f64,
    /// Refinement levels for the convergence subcommand.
    pub convergence_levels: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            checks: vec![
                "rho_phi_identity".into(),
                "def31".into(),
                "long_time".into(),
                "regularization".into(),
            ],
            identity_tol: 0.05,
            long_time_window_frac: 0.5,
            long_time_tol_rho_rel: 1e-6,
            long_time_tol_phi_rel: 1e-3,
            long_time_h1_factor: 10.0,
            long_time_r2_min: 0.95,
            reg_p_fp: 1.5,
            reg_p_hjb: 2.0,
            reg_dt: 5e-3,
            reg_t1: 0.5,
            reg_t2: 1.5,
            reg_a: 0.25,
            reg_scales: vec![1.0, 2.0, 4.0, 8.0],
            reg_tol_lin: 1e-10,
            reg_cap: 100.0,
            convergence_levels: 2,
        }
    }
}

fn bad(key: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key} {why}"))
}

impl ConfigFile {
    /// Parse and validate. Unknown keys and constraint violations surface
    /// as config errors naming the offending key.
    pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    /// Canonical serialization; `parse(serialize(x))` equals `x`.
    pub fn serialize(&self) -> String {
        toml::to_string(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if g.dim != 1 && g.dim != 2 {
            return Err(bad("[grid].dim", "must be 1 or 2"));
        }
        if !(g.lx > 0.0) {
            return Err(bad("[grid].lx", "must be > 0"));
        }
        if g.nx < 3 {
            return Err(bad("[grid].nx", "must be >= 3"));
        }
        if g.dim == 2 {
            if !(g.ly > 0.0) {
                return Err(bad("[grid].ly", "must be > 0"));
            }
            if g.ny < 3 {
                return Err(bad("[grid].ny", "must be >= 3"));
            }
        }
        if !(self.physics.nu > 0.0) {
            return Err(bad("[physics].nu", "must be > 0"));
        }

        let k = &self.kappa;
        if !(k.kappa0 > 0.0) {
            return Err(bad("[kappa].kappa0", "must be > 0"));
        }
        match k.kind.as_str() {
            "constant" => {}
            "affine" => {
                if !(k.r_max > 0.0) {
                    return Err(bad("[kappa].r_max", "must be > 0"));
                }
                if !(k.kappa_min > 0.0) || k.kappa_min > k.kappa0 {
                    return Err(bad("[kappa].kappa_min", "must lie in (0, kappa0]"));
                }
            }
            "rational" => {
                if k.c < 0.0 {
                    return Err(bad("[kappa].c", "must be >= 0"));
                }
            }
            other => {
                return Err(bad(
                    "[kappa].kind",
                    format!("must be constant|affine|rational, got {other:?}"),
                ))
            }
        }

        let d = &self.data;
        if !matches!(d.rho0.as_str(), "zero" | "gaussian" | "eigenmode") {
            return Err(bad(
                "[data].rho0",
                format!("must be zero|gaussian|eigenmode, got {:?}", d.rho0),
            ));
        }
        if d.rho0_amplitude < 0.0 {
            return Err(bad("[data].rho0_amplitude", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&d.rho0_center) {
            return Err(bad("[data].rho0_center", "must lie in [0, 1]"));
        }
        if !(d.rho0_width > 0.0) {
            return Err(bad("[data].rho0_width", "must be > 0"));
        }
        if !matches!(d.psi.as_str(), "zero" | "stationary" | "torsion-plus") {
            return Err(bad(
                "[data].psi",
                format!("must be zero|stationary|torsion-plus, got {:?}", d.psi),
            ));
        }
        if d.psi_offset < 0.0 {
            return Err(bad("[data].psi_offset", "must be >= 0"));
        }
        if !matches!(d.drift.as_str(), "zero" | "constant") {
            return Err(bad(
                "[data].drift",
                format!("must be zero|constant, got {:?}", d.drift),
            ));
        }

        let s = &self.scheme;
        if !(s.t_end > 0.0) {
            return Err(bad("[scheme].t_end", "must be > 0"));
        }
        if !(s.dt > 0.0) {
            return Err(bad("[scheme].dt", "must be > 0"));
        }
        if mfg_core::time::step_count(0.0, s.t_end, s.dt).is_err() {
            return Err(bad(
                "[scheme].dt",
                "t_end must be an integer number of steps",
            ));
        }
        if !(s.theta > 0.0 && s.theta <= 1.0) {
            return Err(bad("[scheme].theta", "must lie in (0, 1]"));
        }
        if !(s.eps_fp > 0.0) {
            return Err(bad("[scheme].eps_fp", "must be > 0"));
        }
        for w in s.snapshot_times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(bad("[scheme].snapshot_times", "must be strictly increasing"));
            }
        }
        for &t in &s.snapshot_times {
            if t < 0.0 || t > s.t_end + 1e-12 {
                return Err(bad(
                    "[scheme].snapshot_times",
                    format!("time {t} outside [0, t_end]"),
                ));
            }
        }
        if !matches!(s.init.as_str(), "uncongested" | "zero") {
            return Err(bad(
                "[scheme].init",
                format!("must be uncongested|zero, got {:?}", s.init),
            ));
        }
        if s.delta_grad < 0.0 {
            return Err(bad("[scheme].delta_grad", "must be >= 0"));
        }
        for w in s.horizons.windows(2) {
            if !(w[1] > w[0]) {
                return Err(bad("[scheme].horizons", "must be strictly increasing"));
            }
        }
        for &t in &s.horizons {
            if mfg_core::time::step_count(0.0, t, s.dt).is_err() {
                return Err(bad(
                    "[scheme].horizons",
                    format!("horizon {t} is not an integer number of steps"),
                ));
            }
        }
        if !(s.stationary_tol > 0.0) {
            return Err(bad("[scheme].stationary_tol", "must be > 0"));
        }
        if !(s.stationary_max_time > 0.0) {
            return Err(bad("[scheme].stationary_max_time", "must be > 0"));
        }

        let diag = &self.diagnostics;
        for name in &diag.checks {
            if !matches!(
                name.as_str(),
                "rho_phi_identity" | "def31" | "long_time" | "regularization"
            ) {
                return Err(bad("[diagnostics].checks", format!("unknown check {name:?}")));
            }
        }
        if !(diag.identity_tol > 0.0) {
            return Err(bad("[diagnostics].identity_tol", "must be > 0"));
        }
        if !(diag.long_time_window_frac > 0.0 && diag.long_time_window_frac <= 1.0) {
            return Err(bad("[diagnostics].long_time_window_frac", "must lie in (0, 1]"));
        }
        if !(diag.reg_p_fp > 1.0) || !(diag.reg_p_hjb > 1.0) {
            return Err(bad("[diagnostics].reg_p_fp", "p exponents must be > 1"));
        }
        if !(diag.reg_dt > 0.0) {
            return Err(bad("[diagnostics].reg_dt", "must be > 0"));
        }
        if !(diag.reg_a > 0.0 && diag.reg_a < 1.0) {
            return Err(bad("[diagnostics].reg_a", "must lie in (0, 1)"));
        }
        let gap = diag.reg_t2 - diag.reg_t1;
        if !(gap > diag.reg_a && gap < 1.0 / diag.reg_a) {
            return Err(bad(
                "[diagnostics].reg_t2",
                "needs reg_a < reg_t2 - reg_t1 < 1/reg_a",
            ));
        }
        if diag.reg_scales.is_empty() || diag.reg_scales.iter().any(|&x| !(x > 0.0)) {
            return Err(bad("[diagnostics].reg_scales", "must be non-empty and positive"));
        }
        if diag.convergence_levels == 0 {
            return Err(bad("[diagnostics].convergence_levels", "must be >= 1"));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid, CliError> {
        let g = &self.grid;
        let grid = match g.dim {
            1 => Grid::line(g.lx, g.nx),
            _ => Grid::rect(g.lx, g.ly, g.nx, g.ny),
        };
        grid.map_err(|e| CliError::Config(format!("[grid] {e}")))
    }

    pub fn build_kappa(&self) -> KappaModel {
        let k = &self.kappa;
        match k.kind.as_str() {
            "affine" => KappaModel::AffineTruncated {
                kappa0: k.kappa0,
                r_max: k.r_max,
                kappa_min: k.kappa_min,
            },
            "rational" => KappaModel::Rational {
                kappa0: k.kappa0,
                c: k.c,
            },
            _ => KappaModel::Constant { kappa0: k.kappa0 },
        }
    }

    pub fn build_rho0(&self, grid: &Grid) -> ScalarField {
        let d = &self.data;
        let mut field = match d.rho0.as_str() {
            "zero" => ScalarField::zeros(grid),
            "eigenmode" => {
                let (lx, amp) = (grid.extent(0), d.rho0_amplitude);
                let dim = grid.dim();
                let ly = if dim == 2 { grid.extent(1) } else { 1.0 };
                ScalarField::from_fn(grid, move |x, y| {
                    let mut v = amp * (std::f64::consts::PI * x / lx).sin();
                    if dim == 2 {
                        v *= (std::f64::consts::PI * y / ly).sin();
                    }
                    v
                })
            }
            _ => {
                let (amp, c, w) = (d.rho0_amplitude, d.rho0_center, d.rho0_width);
                let lx = grid.extent(0);
                let dim = grid.dim();
                let ly = if dim == 2 { grid.extent(1) } else { 1.0 };
                ScalarField::from_fn(grid, move |x, y| {
                    let mut arg = ((x - c * lx) / (w * lx)).powi(2);
                    if dim == 2 {
                        arg += ((y - c * ly) / (w * ly)).powi(2);
                    }
                    amp * (-arg).exp()
                })
            }
        };
        field.set_boundary(0.0);
        field
    }

    pub fn build_psi(&self, grid: &Grid) -> Result<ScalarField, CliError> {
        let solver_err = |e: mfg_core::Error| CliError::Solver(e.to_string());
        let mut field = match self.data.psi.as_str() {
            "zero" => ScalarField::zeros(grid),
            "stationary" => mfg_core::stationary_solve(&mfg_core::StationaryProblem {
                grid: grid.clone(),
                nu: self.physics.nu,
                kappa0: self.build_kappa().at_zero(),
                tol: self.scheme.stationary_tol,
                max_pseudo_time: self.scheme.stationary_max_time,
                dt: None,
            })
            .map_err(solver_err)?,
            _ => {
                let mut t = mfg_core::torsion_solve(self.physics.nu, grid).map_err(solver_err)?;
                let offset = self.data.psi_offset;
                for v in t.values_mut() {
                    *v += offset;
                }
                t
            }
        };
        field.set_boundary(0.0);
        Ok(field)
    }

    /// Drift for standalone density runs.
    pub fn build_drift(&self, grid: &Grid) -> VectorField {
        match self.data.drift.as_str() {
            "constant" => {
                let (vx, vy) = (self.data.drift_vx, self.data.drift_vy);
                VectorField::from_fn(grid, move |_, _| (vx, vy))
            }
            _ => VectorField::zeros(grid),
        }
    }

    /// Assemble the full core configuration for a finite-horizon solve.
    pub fn build_mfg_config(&self) -> Result<MfgConfig, CliError> {
        let grid = self.build_grid()?;
        let kappa = self.build_kappa();
        kappa
            .validate()
            .map_err(|e| CliError::Config(format!("[kappa] {e}")))?;
        let rho0 = self.build_rho0(&grid);
        let psi = self.build_psi(&grid)?;
        let s = &self.scheme;
        Ok(MfgConfig {
            grid,
            nu: self.physics.nu,
            kappa,
            rho0,
            psi,
            t_end: s.t_end,
            dt: s.dt,
            theta: s.theta,
            eps_fp: s.eps_fp,
            max_outer: s.max_outer,
            snapshot_times: s.snapshot_times.clone(),
            delta_grad: if s.delta_grad > 0.0 {
                Some(s.delta_grad)
            } else {
                None
            },
            init: if s.init == "zero" {
                VelocityInit::Zero
            } else {
                VelocityInit::Uncongested
            },
            stationary_tol: s.stationary_tol,
            stationary_max_time: s.stationary_max_time,
        })
    }
}
