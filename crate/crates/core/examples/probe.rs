use mfg_core::*;
fn bump(grid: &Grid, amp: f64, c: f64, w: f64) -> ScalarField {
    let lx = grid.extent(0);
    let mut f = ScalarField::from_fn(grid, |x, _| amp * (-((x - c * lx) / (w * lx)).powi(2)).exp());
    f.set_boundary(0.0);
    f
}
fn main() {
    let grid = Grid::line(1.0, 49).unwrap();
    let rho0 = bump(&grid, 1.2, 0.5, 0.2);
    let psi = ScalarField::zeros(&grid);
    let config = MfgConfig {
        grid, nu: 0.05,
        kappa: KappaModel::AffineTruncated { kappa0: 0.6, r_max: 2.0, kappa_min: 0.3 },
        rho0, psi, t_end: 8.0, dt: 4e-3, theta: 0.5, eps_fp: 1e-6, max_outer: 50,
        snapshot_times: vec![0.0], delta_grad: None, init: VelocityInit::Uncongested,
        stationary_tol: 1e-13, stationary_max_time: 1e4,
    };
    let sol = mfg_solve_finite(&config).unwrap();
    println!("converged {} in {} iters", sol.converged, sol.iterations);
    let r = &sol.record;
    for (k, &t) in r.times.iter().enumerate() {
        if k % 250 == 0 || (t >= 3.0 && t <= 4.2 && k % 50 == 0) {
            println!("t={t:6.2}  rho_linf={:10.3e}  phierr_linf={:10.3e}  phierr_h1={:10.3e}", r.rho_linf[k], r.phierr_linf[k], r.phierr_h1[k]);
        }
    }
}
