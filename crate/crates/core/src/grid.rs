//! Tensor-product grids and grid-aligned fields.
//!
//! The domain is an interval `(0, L)` or a rectangle `(0, Lx) x (0, Ly)`.
//! Each axis carries `n` interior nodes plus one Dirichlet node at each end,
//! so axis `a` has `n_a + 2` nodes with spacing `h_a = L_a / (n_a + 1)`.
//! Fields store one value per node, boundary layer included; homogeneous
//! Dirichlet data is represented by explicit zeros in that layer.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Spatial grid: interval in 1D, rectangle in 2D, Dirichlet layer included.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    extent: [f64; 2],
    n_interior: [usize; 2],
}

impl Grid {
    /// 1D grid on `(0, length)` with `n` interior nodes.
    pub fn line(length: f64, n: usize) -> Result<Self> {
        Self::validate_axis("length", length, n)?;
        Ok(Grid {
            dim: 1,
            extent: [length, 0.0],
            n_interior: [n, 0],
        })
    }

    /// 2D grid on `(0, lx) x (0, ly)` with `nx * ny` interior nodes.
    pub fn rect(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::validate_axis("lx", lx, nx)?;
        Self::validate_axis("ly", ly, ny)?;
        Ok(Grid {
            dim: 2,
            extent: [lx, ly],
            n_interior: [nx, ny],
        })
    }

    fn validate_axis(name: &'static str, length: f64, n: usize) -> Result<()> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Invalid {
                what: name,
                why: "axis length must be positive and finite".to_string(),
            });
        }
        if n < 3 {
            return Err(Error::Invalid {
                what: name,
                why: "need at least 3 interior nodes per axis".to_string(),
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Physical length of axis `a`.
    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    /// Interior node count of axis `a`.
    pub fn interior(&self, axis: usize) -> usize {
        self.n_interior[axis]
    }

    /// Node count of axis `a` including the two Dirichlet nodes.
    pub fn nodes(&self, axis: usize) -> usize {
        self.n_interior[axis] + 2
    }

    /// Grid spacing `h_a = L_a / (n_a + 1)`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / (self.n_interior[axis] + 1) as f64
    }

    pub fn min_spacing(&self) -> f64 {
        let mut h = self.spacing(0);
        if self.dim == 2 {
            h = h.min(self.spacing(1));
        }
        h
    }

    /// Total node count, boundary layer included.
    pub fn node_count(&self) -> usize {
        match self.dim {
            1 => self.nodes(0),
            _ => self.nodes(0) * self.nodes(1),
        }
    }

    /// Flat index of node `(i, j)`; `j` must be 0 in 1D. Row-major in `i`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        match self.dim {
            1 => i,
            _ => i * self.nodes(1) + j,
        }
    }

    /// Coordinate of node index `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        i as f64 * self.spacing(axis)
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        if i == 0 || i == self.nodes(0) - 1 {
            return true;
        }
        if self.dim == 2 && (j == 0 || j == self.nodes(1) - 1) {
            return true;
        }
        false
    }

    /// Trapezoid quadrature weight of node `(i, j)`: `h` interior, `h/2` at
    /// the boundary, tensor product across axes.
    pub fn quad_weight(&self, i: usize, j: usize) -> f64 {
        let wx = self.axis_weight(0, i);
        match self.dim {
            1 => wx,
            _ => wx * self.axis_weight(1, j),
        }
    }

    #[inline]
    fn axis_weight(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing(axis);
        if i == 0 || i == self.nodes(axis) - 1 {
            0.5 * h
        } else {
            h
        }
    }
}

/// One real value per grid node. Houses the density, the value function, the
/// stationary limit, the torsion barrier, and congestion-speed samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![value; grid.node_count()],
        }
    }

    /// Evaluate `f` at every node, boundary included. 1D passes `[x, 0]`.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = ScalarField::zeros(grid);
        let ny = if grid.dim() == 2 { grid.nodes(1) } else { 1 };
        for i in 0..grid.nodes(0) {
            for j in 0..ny {
                let x = grid.coord(0, i);
                let y = if grid.dim() == 2 { grid.coord(1, j) } else { 0.0 };
                field.values[grid.idx(i, j)] = f(x, y);
            }
        }
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Overwrite the Dirichlet layer with `value`.
    pub fn set_boundary(&mut self, value: f64) {
        let g = self.grid.clone();
        let ny = if g.dim() == 2 { g.nodes(1) } else { 1 };
        for i in 0..g.nodes(0) {
            for j in 0..ny {
                if g.is_boundary(i, j) {
                    self.values[g.idx(i, j)] = value;
                }
            }
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self += c * other`. Grids must match.
    pub fn add_scaled(&mut self, other: &ScalarField, c: f64) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                context: "ScalarField::add_scaled",
            });
        }
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }
}

/// One velocity vector per grid node, stored as `dim` component planes.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            grid: grid.clone(),
            comps: (0..grid.dim())
                .map(|_| vec![0.0; grid.node_count()])
                .collect(),
        }
    }

    /// Evaluate per-component closures at every node; 1D ignores `y`.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut field = VectorField::zeros(grid);
        let ny = if grid.dim() == 2 { grid.nodes(1) } else { 1 };
        for i in 0..grid.nodes(0) {
            for j in 0..ny {
                let x = grid.coord(0, i);
                let y = if grid.dim() == 2 { grid.coord(1, j) } else { 0.0 };
                let (vx, vy) = f(x, y);
                let id = grid.idx(i, j);
                field.comps[0][id] = vx;
                if grid.dim() == 2 {
                    field.comps[1][id] = vy;
                }
            }
        }
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    /// Euclidean norm of the vector at flat node index `id`.
    pub fn magnitude_at(&self, id: usize) -> f64 {
        let mut s = 0.0;
        for c in &self.comps {
            s += c[id] * c[id];
        }
        libm::sqrt(s)
    }

    pub fn max_magnitude(&self) -> f64 {
        let mut m: f64 = 0.0;
        for id in 0..self.grid.node_count() {
            m = m.max(self.magnitude_at(id));
        }
        m
    }

    /// Max over nodes of the absolute value of component `axis`.
    pub fn max_abs_component(&self, axis: usize) -> f64 {
        self.comps[axis].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self = (1 - theta) * self + theta * other`.
    pub fn blend(&mut self, other: &VectorField, theta: f64) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                context: "VectorField::blend",
            });
        }
        for (mine, theirs) in self.comps.iter_mut().zip(other.comps.iter()) {
            for (a, b) in mine.iter_mut().zip(theirs.iter()) {
                *a = (1.0 - theta) * *a + theta * b;
            }
        }
        Ok(())
    }

    /// Max over nodes of the Euclidean distance between the two fields.
    pub fn linf_distance(&self, other: &VectorField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                context: "VectorField::linf_distance",
            });
        }
        let mut m: f64 = 0.0;
        for id in 0..self.grid.node_count() {
            let mut s = 0.0;
            for (mine, theirs) in self.comps.iter().zip(other.comps.iter()) {
                let d = mine[id] - theirs[id];
                s += d * d;
            }
            m = m.max(libm::sqrt(s));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_grid_geometry() {
        let g = Grid::line(1.0, 99).unwrap();
        assert_eq!(g.dim(), 1);
        assert_eq!(g.nodes(0), 101);
        assert_eq!(g.node_count(), 101);
        assert!((g.spacing(0) - 0.01).abs() < 1e-15);
        assert!(g.is_boundary(0, 0));
        assert!(g.is_boundary(100, 0));
        assert!(!g.is_boundary(50, 0));
    }

    #[test]
    fn rect_grid_geometry() {
        let g = Grid::rect(2.0, 1.0, 19, 9).unwrap();
        assert_eq!(g.node_count(), 21 * 11);
        assert!((g.spacing(0) - 0.1).abs() < 1e-15);
        assert!((g.spacing(1) - 0.1).abs() < 1e-15);
        assert_eq!(g.idx(1, 0), 11);
        assert!(g.is_boundary(5, 0));
        assert!(g.is_boundary(0, 5));
        assert!(!g.is_boundary(5, 5));
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::line(1.0, 2).is_err());
        assert!(Grid::line(0.0, 10).is_err());
        assert!(Grid::rect(1.0, -1.0, 5, 5).is_err());
    }

    #[test]
    fn from_fn_and_boundary() {
        let g = Grid::line(1.0, 9).unwrap();
        let mut f = ScalarField::from_fn(&g, |x, _| x);
        assert!((f.values()[10] - 1.0).abs() < 1e-15);
        f.set_boundary(0.0);
        assert_eq!(f.values()[0], 0.0);
        assert_eq!(f.values()[10], 0.0);
        assert!((f.values()[5] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vector_blend_is_convex() {
        let g = Grid::line(1.0, 9).unwrap();
        let mut a = VectorField::from_fn(&g, |_, _| (1.0, 0.0));
        let b = VectorField::from_fn(&g, |_, _| (0.0, 0.0));
        a.blend(&b, 0.25).unwrap();
        assert!((a.component(0)[5] - 0.75).abs() < 1e-15);
    }
}
