//! Periodic space-time grids on `[0, T] × [0, 1)^d` and dense fields on them.
//!
//! Spatial axes store `X_i` points without the duplicated endpoint, so point
//! `j` on axis `i` sits at `x = j / X_i`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    sizes: Vec<usize>,
    time_steps: usize,
    horizon: f64,
}

impl Grid {
    pub fn new(dim: usize, sizes: &[usize], time_steps: usize, horizon: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "spatial dimension must be 1 or 2, got {dim}"
            )));
        }
        if sizes.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} axis sizes, got {}",
                sizes.len()
            )));
        }
        if let Some(&bad) = sizes.iter().find(|&&s| s < 2) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least 2 points, got {bad}"
            )));
        }
        if time_steps == 0 {
            return Err(Error::InvalidGrid("time_steps must be positive".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            time_steps,
            horizon,
        })
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of spatial points, `∏ X_i`.
    pub fn points(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.time_steps as f64
    }

    pub fn dx(&self, axis: usize) -> f64 {
        1.0 / self.sizes[axis] as f64
    }

    /// Spatial cell volume `∏ dx_i`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.dx(a)).product()
    }

    /// Shape of a spatial field, `(X_1, …, X_d)`.
    pub fn spatial_shape(&self) -> Vec<usize> {
        self.sizes.clone()
    }

    /// Shape of a space-time field, `(N_t + 1, X_1, …, X_d)`.
    pub fn space_time_shape(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.dim() + 1);
        s.push(self.time_steps + 1);
        s.extend_from_slice(&self.sizes);
        s
    }

    /// Same time discretisation on different spatial sizes.
    pub fn with_sizes(&self, sizes: &[usize]) -> Result<Self> {
        Grid::new(self.dim(), sizes, self.time_steps, self.horizon)
    }

    /// Coordinates of every grid point in row-major order, `x_i = j_i / X_i`.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.points());
        for flat in 0..self.points() {
            out.push(
                self.unravel(flat)
                    .iter()
                    .zip(&self.sizes)
                    .map(|(&j, &n)| j as f64 / n as f64)
                    .collect(),
            );
        }
        out
    }

    /// Multi-index of a flat row-major spatial offset.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.sizes[axis];
            flat /= self.sizes[axis];
        }
        idx
    }

    pub(crate) fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {:?}/{} steps vs {:?}/{} steps",
                self.sizes, self.time_steps, other.sizes, other.time_steps
            )));
        }
        Ok(())
    }
}

fn check_values(data: &[f64], expected: usize, shape: Vec<usize>, what: &str) -> Result<()> {
    if data.len() != expected {
        return Err(Error::ShapeMismatch {
            expected: shape,
            actual: vec![data.len()],
        });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

/// Real field on the spatial grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialField {
    grid: Grid,
    values: Vec<f64>,
}

impl SpatialField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        check_values(&values, grid.points(), grid.spatial_shape(), "spatial field")?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.points()],
            grid: grid.clone(),
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.coordinates().iter().map(|x| f(x)).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.points());
        Self { grid, values }
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

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Real field on the full space-time grid: `N_t + 1` spatial slices.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let n = (grid.time_steps() + 1) * grid.points();
        check_values(&values, n, grid.space_time_shape(), "space-time field")?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; (grid.time_steps() + 1) * grid.points()],
            grid: grid.clone(),
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            values: vec![c; (grid.time_steps() + 1) * grid.points()],
            grid: grid.clone(),
        }
    }

    /// Samples `f(t, x)` at every grid time and point.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, &[f64]) -> f64) -> Self {
        let coords = grid.coordinates();
        let dt = grid.dt();
        let mut values = Vec::with_capacity((grid.time_steps() + 1) * grid.points());
        for n in 0..=grid.time_steps() {
            let t = n as f64 * dt;
            values.extend(coords.iter().map(|x| f(t, x)));
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), (grid.time_steps() + 1) * grid.points());
        Self { grid, values }
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

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let p = self.grid.points();
        &self.values[n * p..(n + 1) * p]
    }

    pub fn slice_mut(&mut self, n: usize) -> &mut [f64] {
        let p = self.grid.points();
        &mut self.values[n * p..(n + 1) * p]
    }

    /// Spatial field at time index `n`.
    pub fn at(&self, n: usize) -> SpatialField {
        SpatialField::from_parts_unchecked(self.grid.clone(), self.slice(n).to_vec())
    }

    /// Spatial field at `t = T`.
    pub fn final_slice(&self) -> SpatialField {
        self.at(self.grid.time_steps())
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }
}
