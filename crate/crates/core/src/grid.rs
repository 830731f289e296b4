//! Uniform periodic parameter grids and scalar fields sampled on them.
//!
//! Grid points are `u_i = i * period_u / n_u`, `v_j = j * period_v / n_v`
//! (endpoint excluded). Samples are stored row-major with `u` as the slow
//! index: the flat index of `(i, j)` is `i * n_v + j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    n_u: usize,
    n_v: usize,
    period_u: f64,
    period_v: f64,
}

impl ParamGrid {
    pub fn new(n_u: usize, n_v: usize, period_u: f64, period_v: f64) -> Result<Self> {
        for (name, n) in [("n_u", n_u), ("n_v", n_v)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be even and >= 8")));
            }
        }
        for (name, p) in [("period_u", period_u), ("period_v", period_v)] {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {p} must be positive")));
            }
        }
        Ok(Self { n_u, n_v, period_u, period_v })
    }

    /// Square grid with `n` samples and period `2π` in both directions.
    pub fn torus(n: usize) -> Result<Self> {
        Self::new(n, n, std::f64::consts::TAU, std::f64::consts::TAU)
    }

    /// Square grid with period `√2·π`, the flat chart of the Clifford torus in S³.
    pub fn clifford_chart(n: usize) -> Result<Self> {
        let p = std::f64::consts::SQRT_2 * std::f64::consts::PI;
        Self::new(n, n, p, p)
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn period_u(&self) -> f64 {
        self.period_u
    }

    pub fn period_v(&self) -> f64 {
        self.period_v
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_v
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn du(&self) -> f64 {
        self.period_u / self.n_u as f64
    }

    pub fn dv(&self) -> f64 {
        self.period_v / self.n_v as f64
    }

    /// Parameter-space area of one grid cell (uniform quadrature weight).
    pub fn cell_area(&self) -> f64 {
        self.du() * self.dv()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_v + j
    }

    /// Parameter coordinates of flat index `k`.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k / self.n_v, k % self.n_v);
        (i as f64 * self.du(), j as f64 * self.dv())
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |k| self.coords(k))
    }

    pub(crate) fn has_periods(&self, pu: f64, pv: f64) -> bool {
        (self.period_u - pu).abs() <= 1e-12 * pu && (self.period_v - pv).abs() <= 1e-12 * pv
    }
}

/// One real value per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: ParamGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: ParamGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: ParamGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: ParamGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f(u, v)` at every grid point.
    pub fn from_fn(grid: ParamGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.points().map(|(u, v)| f(u, v)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &ParamGrid {
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

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| s * x)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
