//! Discrete differential operators and quadrature shared by both PDE solvers.
//!
//! All stencils assume the Dirichlet layer is populated (fields store
//! boundary values explicitly), so no ghost handling is needed: the first
//! interior layer simply reads its boundary neighbor.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};

/// Quadrature-weighted norms plus the discrete H1 seminorm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// `|| grad f ||_{L2}` with the centered gradient.
    pub h1_seminorm: f64,
}

/// Second-order centered Laplacian. Interior nodes only; boundary rows of
/// the output are zero.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = f.grid().clone();
    let v = f.values();
    let mut out = ScalarField::zeros(&g);
    match g.dim() {
        1 => {
            let h2 = g.spacing(0) * g.spacing(0);
            let o = out.values_mut();
            for i in 1..g.nodes(0) - 1 {
                o[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2;
            }
        }
        _ => {
            let hx2 = g.spacing(0) * g.spacing(0);
            let hy2 = g.spacing(1) * g.spacing(1);
            let ny = g.nodes(1);
            let o = out.values_mut();
            for i in 1..g.nodes(0) - 1 {
                for j in 1..ny - 1 {
                    let id = i * ny + j;
                    o[id] = (v[id - ny] - 2.0 * v[id] + v[id + ny]) / hx2
                        + (v[id - 1] - 2.0 * v[id] + v[id + 1]) / hy2;
                }
            }
        }
    }
    out
}

#[inline]
fn axis_stride(g: &Grid, axis: usize) -> usize {
    match (g.dim(), axis) {
        (1, _) => 1,
        (_, 0) => g.nodes(1),
        _ => 1,
    }
}

/// Centered gradient at interior nodes, one-sided at the Dirichlet layer.
pub fn gradient_centered(f: &ScalarField) -> VectorField {
    let g = f.grid().clone();
    let mut out = VectorField::zeros(&g);
    for axis in 0..g.dim() {
        per_axis_derivative(f, axis, out.component_mut(axis), |_| Bias::Centered);
    }
    out
}

/// Upwind gradient: the difference direction at each node follows the sign
/// of the supplied direction field (positive selects the backward
/// difference), falling back to centered where the direction vanishes.
pub fn gradient_upwind(f: &ScalarField, direction: &VectorField) -> Result<VectorField> {
    if f.grid() != direction.grid() {
        return Err(Error::GridMismatch {
            context: "gradient_upwind",
        });
    }
    let g = f.grid().clone();
    let mut out = VectorField::zeros(&g);
    for axis in 0..g.dim() {
        let dir = direction.component(axis);
        per_axis_derivative(f, axis, out.component_mut(axis), |id| {
            if dir[id] > 0.0 {
                Bias::Backward
            } else if dir[id] < 0.0 {
                Bias::Forward
            } else {
                Bias::Centered
            }
        });
    }
    Ok(out)
}

#[derive(Clone, Copy)]
enum Bias {
    Centered,
    Backward,
    Forward,
}

fn per_axis_derivative(
    f: &ScalarField,
    axis: usize,
    out: &mut [f64],
    bias: impl Fn(usize) -> Bias,
) {
    let g = f.grid();
    let v = f.values();
    let h = g.spacing(axis);
    let stride = axis_stride(g, axis);
    let last = g.nodes(axis) - 1;
    let other_nodes = if g.dim() == 2 {
        g.nodes(1 - axis)
    } else {
        1
    };
    for other in 0..other_nodes {
        for i in 0..=last {
            let id = if g.dim() == 1 {
                i
            } else if axis == 0 {
                g.idx(i, other)
            } else {
                g.idx(other, i)
            };
            out[id] = if i == 0 {
                (v[id + stride] - v[id]) / h
            } else if i == last {
                (v[id] - v[id - stride]) / h
            } else {
                match bias(id) {
                    Bias::Centered => (v[id + stride] - v[id - stride]) / (2.0 * h),
                    Bias::Backward => (v[id] - v[id - stride]) / h,
                    Bias::Forward => (v[id + stride] - v[id]) / h,
                }
            };
        }
    }
}

/// Product-trapezoid quadrature of `f` over the domain. Boundary nodes carry
/// weight `h/2` per axis, so homogeneous Dirichlet data contributes nothing.
pub fn integrate(f: &ScalarField) -> f64 {
    weighted_sum(f, |x| x)
}

/// `( integral |f|^p )^(1/p)` with the same quadrature.
pub fn lp_norm(f: &ScalarField, p: f64) -> f64 {
    let s = weighted_sum(f, |x| libm::pow(x.abs(), p));
    libm::pow(s, 1.0 / p)
}

fn weighted_sum(f: &ScalarField, map: impl Fn(f64) -> f64) -> f64 {
    let g = f.grid();
    let v = f.values();
    let mut acc = 0.0;
    match g.dim() {
        1 => {
            for i in 0..g.nodes(0) {
                acc += g.quad_weight(i, 0) * map(v[i]);
            }
        }
        _ => {
            let ny = g.nodes(1);
            for i in 0..g.nodes(0) {
                for j in 0..ny {
                    acc += g.quad_weight(i, j) * map(v[i * ny + j]);
                }
            }
        }
    }
    acc
}

/// Quadrature-weighted inner product of two fields on the same grid.
pub fn inner_product(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch {
            context: "inner_product",
        });
    }
    let g = a.grid();
    let (av, bv) = (a.values(), b.values());
    let mut acc = 0.0;
    let ny = if g.dim() == 2 { g.nodes(1) } else { 1 };
    for i in 0..g.nodes(0) {
        for j in 0..ny {
            let id = g.idx(i, j);
            acc += g.quad_weight(i, j) * av[id] * bv[id];
        }
    }
    Ok(acc)
}

/// Quadrature-weighted L1 distance between two fields on the same grid.
pub fn l1_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch {
            context: "l1_distance",
        });
    }
    let g = a.grid();
    let (av, bv) = (a.values(), b.values());
    let mut acc = 0.0;
    let ny = if g.dim() == 2 { g.nodes(1) } else { 1 };
    for i in 0..g.nodes(0) {
        for j in 0..ny {
            let id = g.idx(i, j);
            acc += g.quad_weight(i, j) * (av[id] - bv[id]).abs();
        }
    }
    Ok(acc)
}

/// Max-norm distance between two scalar fields on the same grid.
pub fn linf_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch {
            context: "linf_distance",
        });
    }
    let mut m: f64 = 0.0;
    for (x, y) in a.values().iter().zip(b.values().iter()) {
        m = m.max((x - y).abs());
    }
    Ok(m)
}

/// L1, L2, L-infinity norms and the discrete H1 seminorm of `f`.
pub fn discrete_norms(f: &ScalarField) -> Norms {
    let l1 = weighted_sum(f, |x| x.abs());
    let l2 = libm::sqrt(weighted_sum(f, |x| x * x));
    let linf = f.linf();
    let grad = gradient_centered(f);
    let g = f.grid();
    let mut h1sq = 0.0;
    let ny = if g.dim() == 2 { g.nodes(1) } else { 1 };
    for i in 0..g.nodes(0) {
        for j in 0..ny {
            let id = g.idx(i, j);
            let mut s = 0.0;
            for axis in 0..g.dim() {
                let gv = grad.component(axis)[id];
                s += gv * gv;
            }
            h1sq += g.quad_weight(i, j) * s;
        }
    }
    Norms {
        l1,
        l2,
        linf,
        h1_seminorm: libm::sqrt(h1sq),
    }
}
