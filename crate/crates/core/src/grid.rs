//! Uniform Cartesian grids and central-difference stencils.

use serde::{Deserialize, Serialize};

use crate::error::{GcfError, Result};

/// Node `(i, j)` sits at `(x0 + i dx, y0 + j dy)`; fields are stored row-major
/// with `i` fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, dx: f64, dy: f64) -> Result<Self> {
        if nx < 5 || ny < 5 {
            return Err(GcfError::InvalidGrid(format!(
                "need at least 5x5 nodes, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(GcfError::InvalidGrid(format!(
                "spacings must be positive, got {dx}, {dy}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            x0,
            y0,
            dx,
            dy,
        })
    }

    /// `n x n` nodes covering `[-half, half]^2`.
    pub fn square(n: usize, half: f64) -> Result<Self> {
        if n < 5 {
            return Err(GcfError::InvalidGrid(format!(
                "need at least 5x5 nodes, got {n}x{n}"
            )));
        }
        let h = 2.0 * half / (n - 1) as f64;
        Self::new(n, n, -half, -half, h, h)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }

    #[inline]
    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Samples `u(x, y)` at every node.
    pub fn sample(&self, u: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(u(self.x(i), self.y(j)));
            }
        }
        out
    }

    /// Interior nodes `(i, j)` in storage order.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn bilinear(&self, u: &[f64], x: f64, y: f64) -> Option<f64> {
        let (cell, w) = self.locate(x, y)?;
        let (i, j) = cell;
        let (a, b) = w;
        let u00 = u[self.idx(i, j)];
        let u10 = u[self.idx(i + 1, j)];
        let u01 = u[self.idx(i, j + 1)];
        let u11 = u[self.idx(i + 1, j + 1)];
        Some((1.0 - a) * (1.0 - b) * u00 + a * (1.0 - b) * u10 + (1.0 - a) * b * u01 + a * b * u11)
    }

    /// Lower-left node of the cell containing `(x, y)` and the local weights.
    pub fn locate(&self, x: f64, y: f64) -> Option<((usize, usize), (f64, f64))> {
        let sx = (x - self.x0) / self.dx;
        let sy = (y - self.y0) / self.dy;
        let (mx, my) = ((self.nx - 1) as f64, (self.ny - 1) as f64);
        if !(sx >= 0.0 && sy >= 0.0 && sx <= mx && sy <= my) {
            return None;
        }
        let i = (sx.floor() as usize).min(self.nx - 2);
        let j = (sy.floor() as usize).min(self.ny - 2);
        Some(((i, j), (sx - i as f64, sy - j as f64)))
    }

    /// Nodes of the grid rotated by 90 degrees about its center: the value at
    /// `(i, j)` of the result is `u` at `(j, nx - 1 - i)`. Requires a square grid.
    pub fn rotate90(&self, u: &[f64]) -> Vec<f64> {
        let n = self.nx;
        let mut out = vec![0.0; u.len()];
        for j in 0..n {
            for i in 0..n {
                out[self.idx(i, j)] = u[self.idx(j, n - 1 - i)];
            }
        }
        out
    }
}

/// First and second central differences at an interior node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivs {
    pub ux: f64,
    pub uy: f64,
    pub uxx: f64,
    pub uyy: f64,
    pub uxy: f64,
}

impl Derivs {
    #[inline]
    pub fn at(grid: &Grid2, u: &[f64], i: usize, j: usize) -> Self {
        let k = grid.idx(i, j);
        let nx = grid.nx;
        let (c, e, w, n, s) = (u[k], u[k + 1], u[k - 1], u[k + nx], u[k - nx]);
        let (ne, nw, se, sw) = (u[k + nx + 1], u[k + nx - 1], u[k - nx + 1], u[k - nx - 1]);
        let (dx, dy) = (grid.dx, grid.dy);
        Self {
            ux: (e - w) / (2.0 * dx),
            uy: (n - s) / (2.0 * dy),
            uxx: (e - 2.0 * c + w) / (dx * dx),
            uyy: (n - 2.0 * c + s) / (dy * dy),
            uxy: (ne - nw - se + sw) / (4.0 * dx * dy),
        }
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.uxx * self.uyy - self.uxy * self.uxy
    }

    #[inline]
    pub fn grad_sq(&self) -> f64 {
        self.ux * self.ux + self.uy * self.uy
    }

    /// Eigenvalues of the Hessian, ascending.
    pub fn hessian_eigs(&self) -> (f64, f64) {
        sym_eigs(self.uxx, self.uxy, self.uyy)
    }
}

/// Eigenvalues `(min, max)` of the symmetric matrix `[[a, b], [b, c]]`.
#[inline]
pub fn sym_eigs(a: f64, b: f64, c: f64) -> (f64, f64) {
    let m = 0.5 * (a + c);
    let d = (0.5 * (a - c)).hypot(b);
    (m - d, m + d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratics_are_differentiated_exactly() {
        let g = Grid2::square(11, 1.0).unwrap();
        let u = g.sample(|x, y| 1.0 + 2.0 * x - y + 0.5 * x * x + 3.0 * x * y - 2.0 * y * y);
        let d = Derivs::at(&g, &u, 4, 7);
        let (x, y) = (g.x(4), g.y(7));
        assert!((d.ux - (2.0 + x + 3.0 * y)).abs() < 1e-12);
        assert!((d.uy - (-1.0 + 3.0 * x - 4.0 * y)).abs() < 1e-12);
        assert!((d.uxx - 1.0).abs() < 1e-10);
        assert!((d.uyy + 4.0).abs() < 1e-10);
        assert!((d.uxy - 3.0).abs() < 1e-10);
    }

    #[test]
    fn bilinear_reproduces_bilinear_functions() {
        let g = Grid2::square(9, 1.0).unwrap();
        let u = g.sample(|x, y| 2.0 + x - 3.0 * y + x * y);
        for (x, y) in [(0.1, 0.2), (-0.93, 0.77), (1.0, 1.0), (-1.0, -1.0)] {
            let v = g.bilinear(&u, x, y).unwrap();
            assert!((v - (2.0 + x - 3.0 * y + x * y)).abs() < 1e-13);
        }
        assert!(g.bilinear(&u, 1.01, 0.0).is_none());
    }

    #[test]
    fn rotation_by_four_quarter_turns_is_identity() {
        let g = Grid2::square(7, 1.0).unwrap();
        let u = g.sample(|x, y| x + 10.0 * y * y * y);
        let mut v = u.clone();
        for _ in 0..4 {
            v = g.rotate90(&v);
        }
        assert_eq!(u, v);
        let r = g.rotate90(&u);
        // value at (x, y) of the rotated field is u(y, -x)
        let (i, j) = (2, 5);
        let expected = g.x(j) + 10.0 * (-g.x(i)).powi(3);
        assert!((r[g.idx(i, j)] - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid2::square(4, 1.0).is_err());
        assert!(Grid2::new(6, 6, 0.0, 0.0, 0.0, 1.0).is_err());
    }
}
