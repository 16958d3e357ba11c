//! Uniform rectilinear 2D grids and the scalar fields living on them.

use crate::error::{Error, Result};

/// Uniform square-cell grid. Node `(i, j)` sits at `origin + (i*h, j*h)`;
/// coordinates are always recomputed from the index so they are exactly
/// reproducible (no accumulated summation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    origin: (f64, f64),
    h: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(origin: (f64, f64), h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be > 0")));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per side, got {nx} x {ny}"
            )));
        }
        Ok(Self { origin, h, nx, ny })
    }

    /// Square grid covering `[xmin, xmax]²` with spacing `h`;
    /// `nx = ny = round((xmax - xmin)/h) + 1`.
    pub fn make_grid(xmin: f64, xmax: f64, h: f64) -> Result<Self> {
        if !(xmax > xmin) {
            return Err(Error::InvalidGrid(format!("empty extent [{xmin}, {xmax}]")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be > 0")));
        }
        let n = ((xmax - xmin) / h).round() as usize + 1;
        Self::new((xmin, xmin), h, n, n)
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false // nx, ny >= 3 by construction
    }

    /// Coordinates of node `(i, j)`.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + i as f64 * self.h,
            self.origin.1 + j as f64 * self.h,
        )
    }

    /// Row-major storage index of node `(i, j)`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Inverse of [`Grid::idx`].
    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Grid index of the node nearest to `(x, y)`, clamped to the grid.
    pub fn nearest(&self, x: f64, y: f64) -> (usize, usize) {
        let fi = ((x - self.origin.0) / self.h).round();
        let fj = ((y - self.origin.1) / self.h).round();
        let clamp = |f: f64, n: usize| -> usize {
            if f <= 0.0 {
                0
            } else {
                (f as usize).min(n - 1)
            }
        };
        (clamp(fi, self.nx), clamp(fj, self.ny))
    }

    /// True if every node of `sub` coincides with a node of `self`
    /// (within `1e-9 * h`).
    pub fn contains_aligned(&self, sub: &Grid) -> bool {
        if (sub.h / self.h - (sub.h / self.h).round()).abs() > 1e-9 {
            return false;
        }
        let corners = [sub.node(0, 0), sub.node(sub.nx - 1, sub.ny - 1)];
        corners.iter().all(|&(x, y)| {
            let (i, j) = self.nearest(x, y);
            let (gx, gy) = self.node(i, j);
            (gx - x).abs() <= 1e-9 * self.h && (gy - y).abs() <= 1e-9 * self.h
        })
    }
}

/// Closed-form function of position, sampled onto grids by [`sample_field`].
pub trait AnalyticField {
    fn eval(&self, x: f64, y: f64) -> f64;
}

/// 64-bit samples of a function on a [`Grid`], stored row-major
/// (`values[j*nx + i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let (x, y) = grid.node(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid {}x{}",
                values.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Self { grid, values })
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

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.grid.idx(i, j);
        self.values[idx] = v;
    }

    /// NaN/Inf anywhere is a contract violation; this check detects it.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self - other`, nodewise. Panics on grid mismatch.
    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid, "field grids differ");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn scale(&self, k: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| k * v).collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid, "field grids differ");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    /// Extract the samples of `self` at the nodes of `sub`, which must all
    /// coincide with nodes of this field's grid.
    pub fn restrict(&self, sub: Grid) -> Result<ScalarField> {
        if !self.grid.contains_aligned(&sub) {
            return Err(Error::InvalidGrid(
                "subgrid nodes do not align with parent grid".into(),
            ));
        }
        let mut values = Vec::with_capacity(sub.len());
        for j in 0..sub.ny() {
            for i in 0..sub.nx() {
                let (x, y) = sub.node(i, j);
                let (pi, pj) = self.grid.nearest(x, y);
                values.push(self.at(pi, pj));
            }
        }
        Ok(ScalarField { grid: sub, values })
    }
}

/// Pointwise evaluation of a closed-form spec at every grid node.
pub fn sample_field(spec: &impl AnalyticField, grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| spec.eval(x, y))
}
