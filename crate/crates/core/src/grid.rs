//! Uniform spatial and velocity grids and the discrete L² inner products.
//!
//! All quadrature is the midpoint/rectangle rule with constant weights `dx`
//! and `dv^d_v`. Velocity nodes exclude the right endpoint `+L_v` so that the
//! grid coincides with the collocation grid of the discrete Fourier transform
//! used by the collision module.

use crate::error::{Error, Result};

/// Boundary condition for the spatial direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Periodic,
    /// Zero-gradient extrapolation (edge value copied outward).
    Neumann,
}

/// Uniform cell-centered spatial grid on `[x_min, x_max]`.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    pub n_x: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub bc: BoundaryCondition,
}

impl SpatialGrid {
    pub fn new(n_x: usize, x_min: f64, x_max: f64, bc: BoundaryCondition) -> Result<Self> {
        if n_x == 0 || !(x_max - x_min).is_finite() || x_max <= x_min {
            return Err(Error::Config(format!(
                "spatial grid needs n_x > 0 and x_max > x_min, got n_x={n_x}, [{x_min}, {x_max}]"
            )));
        }
        Ok(Self { n_x, x_min, x_max, bc })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    /// Cell centers x_i = x_min + (i + 1/2) dx.
    pub fn cell_centers(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_x).map(|i| self.x_min + (i as f64 + 0.5) * dx).collect()
    }
}

/// Uniform velocity grid on `[-L_v, L_v)^d_v`, right endpoint excluded.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    pub d_v: usize,
    pub n_v: usize,
    pub l_v: f64,
}

impl VelocityGrid {
    pub fn new(d_v: usize, n_v: usize, l_v: f64) -> Result<Self> {
        if d_v != 1 && d_v != 2 {
            return Err(Error::Config(format!("velocity dimension must be 1 or 2, got {d_v}")));
        }
        if n_v < 4 || n_v % 2 != 0 {
            return Err(Error::Config(format!("n_v must be even and >= 4, got {n_v}")));
        }
        if !(l_v > 0.0) {
            return Err(Error::Config(format!("L_v must be positive, got {l_v}")));
        }
        Ok(Self { d_v, n_v, l_v })
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.l_v / self.n_v as f64
    }

    /// Quadrature weight per node: dv^d_v.
    pub fn weight(&self) -> f64 {
        self.dv().powi(self.d_v as i32)
    }

    /// Number of nodes in the flattened grid: n_v^d_v.
    pub fn flat_len(&self) -> usize {
        self.n_v.pow(self.d_v as u32)
    }

    /// Per-dimension node values v_k = -L_v + k dv.
    pub fn nodes(&self) -> Vec<f64> {
        let dv = self.dv();
        (0..self.n_v).map(|k| -self.l_v + k as f64 * dv).collect()
    }

    /// Flattened values of one velocity component.
    ///
    /// Flat ordering is v1-major: w = k1 * n_v + k2 in 2D, w = k in 1D.
    pub fn component(&self, axis: usize) -> Vec<f64> {
        assert!(axis < self.d_v, "axis {axis} out of range for d_v={}", self.d_v);
        let nodes = self.nodes();
        match self.d_v {
            1 => nodes,
            _ => {
                let n = self.n_v;
                let mut out = Vec::with_capacity(n * n);
                for k1 in 0..n {
                    for k2 in 0..n {
                        out.push(if axis == 0 { nodes[k1] } else { nodes[k2] });
                    }
                }
                out
            }
        }
    }

    /// Flattened |v|^2 values.
    pub fn speed_squared(&self) -> Vec<f64> {
        let nodes = self.nodes();
        match self.d_v {
            1 => nodes.iter().map(|v| v * v).collect(),
            _ => {
                let n = self.n_v;
                let mut out = Vec::with_capacity(n * n);
                for k1 in 0..n {
                    for k2 in 0..n {
                        out.push(nodes[k1] * nodes[k1] + nodes[k2] * nodes[k2]);
                    }
                }
                out
            }
        }
    }
}

/// Discrete inner product <a, b>_x = sum_i a_i b_i dx.
pub fn inner_product_x(grid: &SpatialGrid, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != grid.n_x || b.len() != grid.n_x {
        return Err(Error::Contract(format!(
            "inner_product_x: field lengths {} and {} must equal n_x = {}",
            a.len(),
            b.len(),
            grid.n_x
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * grid.dx())
}

/// Discrete inner product <a, b>_v = sum_k a_k b_k dv^d_v.
pub fn inner_product_v(grid: &VelocityGrid, a: &[f64], b: &[f64]) -> Result<f64> {
    let m = grid.flat_len();
    if a.len() != m || b.len() != m {
        return Err(Error::Contract(format!(
            "inner_product_v: field lengths {} and {} must equal n_v^d_v = {m}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * grid.weight())
}

/// Pad a spatial field with `width` ghost cells on each side.
///
/// Periodic wraps values; Neumann copies the edge value outward. The original
/// cells occupy `out[width .. width + field.len()]` unchanged.
pub fn ghost_fill(field: &[f64], bc: BoundaryCondition, width: usize) -> Vec<f64> {
    let n = field.len();
    let mut out = Vec::with_capacity(n + 2 * width);
    for i in 0..width {
        out.push(match bc {
            // wrap: index n - width + i, repeating the array for width > n
            BoundaryCondition::Periodic => field[(n - (width - i) % n) % n],
            BoundaryCondition::Neumann => field[0],
        });
    }
    out.extend_from_slice(field);
    for i in 0..width {
        out.push(match bc {
            BoundaryCondition::Periodic => field[i % n],
            BoundaryCondition::Neumann => field[n - 1],
        });
    }
    out
}
