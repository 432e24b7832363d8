//! Linear solvers for the implicit diffusion steps and elliptic solves.
//!
//! Every system here has the form `(m I + s (-Lap_h)) u = b` on interior
//! nodes with zero Dirichlet data, `m >= 0`, `s > 0`: symmetric positive
//! definite and diagonally dominant. 1D systems go through the Thomas
//! algorithm (direct, exact to round-off); 2D systems through unpreconditioned
//! conjugate gradients with a deterministic iteration order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Relative residual target for the 2D conjugate-gradient solves.
pub const CG_REL_TOL: f64 = 1e-13;

/// Thomas algorithm for a tridiagonal system. `lower[0]` and
/// `upper[n-1]` are ignored. Fails on a vanishing pivot.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::LinearSolve {
            why: format!("zero pivot at row 0"),
        });
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::LinearSolve {
                why: format!("zero pivot at row {i}"),
            });
        }
        if i < n - 1 {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Solve `(mass I + stiff (-Lap_h)) u = rhs` on interior nodes with zero
/// Dirichlet data. `rhs` boundary entries are ignored; the output boundary
/// layer is zero.
pub fn solve_shifted_laplacian(
    grid: &Grid,
    mass: f64,
    stiff: f64,
    rhs: &ScalarField,
) -> Result<ScalarField> {
    if rhs.grid() != grid {
        return Err(Error::GridMismatch {
            context: "solve_shifted_laplacian",
        });
    }
    if !(stiff > 0.0) || mass < 0.0 {
        return Err(Error::LinearSolve {
            why: format!("coefficients not SPD: mass = {mass}, stiff = {stiff}"),
        });
    }
    match grid.dim() {
        1 => solve_1d(grid, mass, stiff, rhs),
        _ => solve_2d_cg(grid, mass, stiff, rhs),
    }
}

fn solve_1d(grid: &Grid, mass: f64, stiff: f64, rhs: &ScalarField) -> Result<ScalarField> {
    let n = grid.interior(0);
    let h2 = grid.spacing(0) * grid.spacing(0);
    let diag = vec![mass + 2.0 * stiff / h2; n];
    let off = vec![-stiff / h2; n];
    let b: Vec<f64> = (1..=n).map(|i| rhs.values()[i]).collect();
    let x = solve_tridiagonal(&off, &diag, &off, &b)?;
    let mut out = ScalarField::zeros(grid);
    for (i, xi) in x.into_iter().enumerate() {
        out.values_mut()[i + 1] = xi;
    }
    Ok(out)
}

/// 5-point stencil matvec of `mass I + stiff (-Lap_h)` over interior nodes,
/// reading `u` as a full-grid layout with a zero boundary layer.
fn apply_2d(grid: &Grid, mass: f64, stiff: f64, u: &[f64], out: &mut [f64]) {
    let ny = grid.nodes(1);
    let cx = stiff / (grid.spacing(0) * grid.spacing(0));
    let cy = stiff / (grid.spacing(1) * grid.spacing(1));
    for i in 1..grid.nodes(0) - 1 {
        for j in 1..ny - 1 {
            let id = i * ny + j;
            out[id] = (mass + 2.0 * (cx + cy)) * u[id]
                - cx * (u[id - ny] + u[id + ny])
                - cy * (u[id - 1] + u[id + 1]);
        }
    }
}

fn solve_2d_cg(grid: &Grid, mass: f64, stiff: f64, rhs: &ScalarField) -> Result<ScalarField> {
    let ny = grid.nodes(1);
    let total = grid.node_count();
    let interior = |i: usize, j: usize| i >= 1 && i < grid.nodes(0) - 1 && j >= 1 && j < ny - 1;

    let mut b = vec![0.0; total];
    let mut bnorm2 = 0.0;
    for i in 0..grid.nodes(0) {
        for j in 0..ny {
            if interior(i, j) {
                let v = rhs.values()[i * ny + j];
                b[i * ny + j] = v;
                bnorm2 += v * v;
            }
        }
    }
    let mut x = vec![0.0; total];
    if bnorm2 == 0.0 {
        return Ok(ScalarField::zeros(grid));
    }

    let mut r = b;
    let mut p = r.clone();
    let mut ap = vec![0.0; total];
    let mut rr: f64 = bnorm2;
    let target2 = bnorm2 * CG_REL_TOL * CG_REL_TOL;
    let max_iter = 200 * (grid.nodes(0) + ny) + 2000;
    for _ in 0..max_iter {
        if rr <= target2 {
            let mut out = ScalarField::zeros(grid);
            out.values_mut().copy_from_slice(&x);
            return Ok(out);
        }
        apply_2d(grid, mass, stiff, &p, &mut ap);
        let mut pap = 0.0;
        for i in 1..grid.nodes(0) - 1 {
            for j in 1..ny - 1 {
                let id = i * ny + j;
                pap += p[id] * ap[id];
            }
        }
        if pap <= 0.0 {
            return Err(Error::LinearSolve {
                why: format!("CG curvature {pap} not positive"),
            });
        }
        let alpha = rr / pap;
        let mut rr_new = 0.0;
        for i in 1..grid.nodes(0) - 1 {
            for j in 1..ny - 1 {
                let id = i * ny + j;
                x[id] += alpha * p[id];
                r[id] -= alpha * ap[id];
                rr_new += r[id] * r[id];
            }
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 1..grid.nodes(0) - 1 {
            for j in 1..ny - 1 {
                let id = i * ny + j;
                p[id] = r[id] + beta * p[id];
            }
        }
    }
    Err(Error::LinearSolve {
        why: format!(
            "CG did not reach tolerance {CG_REL_TOL} in {max_iter} iterations (residual ratio {})",
            libm::sqrt(rr / bnorm2)
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_known_system() {
        // [2 1 0; 1 2 1; 0 1 2] x = [4; 8; 8] -> x = [1; 2; 3]
        let lower = [0.0, 1.0, 1.0];
        let diag = [2.0, 2.0, 2.0];
        let upper = [1.0, 1.0, 0.0];
        let rhs = [4.0, 8.0, 8.0];
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
        assert!((x[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn shifted_laplacian_1d_recovers_quadratic() {
        // -nu Lap u = 1 with u = x(L-x)/(2 nu): stencil-exact.
        let nu = 0.35;
        let l = 1.0;
        let g = Grid::line(l, 31).unwrap();
        let rhs = ScalarField::constant(&g, 1.0);
        let u = solve_shifted_laplacian(&g, 0.0, nu, &rhs).unwrap();
        for i in 0..g.nodes(0) {
            let x = g.coord(0, i);
            let exact = x * (l - x) / (2.0 * nu);
            assert!((u.values()[i] - exact).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn shifted_laplacian_2d_matches_eigenmode() {
        // (I + c (-Lap)) applied to the discrete eigenmode scales it by
        // 1 + c * lambda_h; the solve must invert that factor.
        use core::f64::consts::PI;
        let g = Grid::rect(1.0, 1.0, 15, 15).unwrap();
        let h = g.spacing(0);
        let mode = ScalarField::from_fn(&g, |x, y| libm::sin(PI * x) * libm::sin(PI * y));
        let lam = 2.0 * (2.0 / (h * h)) * (1.0 - libm::cos(PI * h));
        let c = 0.07;
        let u = solve_shifted_laplacian(&g, 1.0, c, &mode).unwrap();
        let factor = 1.0 / (1.0 + c * lam);
        for i in 1..g.nodes(0) - 1 {
            for j in 1..g.nodes(1) - 1 {
                let id = g.idx(i, j);
                let expect = factor * mode.values()[id];
                assert!((u.values()[id] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = Grid::rect(1.0, 1.0, 7, 7).unwrap();
        let rhs = ScalarField::zeros(&g);
        let u = solve_shifted_laplacian(&g, 1.0, 0.1, &rhs).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }
}
