//! Sampled immersions of the torus into R³ or the unit sphere S³ ⊂ R⁴.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ParamGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ambient {
    R3,
    S3,
}

impl Ambient {
    pub fn dim(self) -> usize {
        match self {
            Ambient::R3 => 3,
            Ambient::S3 => 4,
        }
    }
}

/// Positions stored component-wise: `coords[c][k]` is coordinate `c` of grid point `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Immersion {
    grid: ParamGrid,
    ambient: Ambient,
    coords: Vec<Vec<f64>>,
}

impl Immersion {
    pub fn new(grid: ParamGrid, ambient: Ambient, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != ambient.dim() || coords.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidParameter(format!(
                "expected {} components of length {}",
                ambient.dim(),
                grid.len()
            )));
        }
        if coords.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite position".into()));
        }
        let im = Self { grid, ambient, coords };
        if ambient == Ambient::S3 {
            for k in 0..grid.len() {
                let p = im.point4(k);
                let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "S³ point {k} has norm {norm} != 1"
                    )));
                }
            }
        }
        Ok(im)
    }

    /// Builds an R³ immersion from per-point positions.
    pub fn from_points(grid: ParamGrid, points: &[[f64; 3]]) -> Result<Self> {
        let coords = (0..3).map(|c| points.iter().map(|p| p[c]).collect()).collect();
        Self::new(grid, Ambient::R3, coords)
    }

    /// Samples `f(u, v)` into R³.
    pub fn from_fn(grid: ParamGrid, f: impl Fn(f64, f64) -> [f64; 3]) -> Result<Self> {
        let pts: Vec<[f64; 3]> = grid.points().map(|(u, v)| f(u, v)).collect();
        Self::from_points(grid, &pts)
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Point `k` of an R³ immersion.
    pub fn point(&self, k: usize) -> [f64; 3] {
        [self.coords[0][k], self.coords[1][k], self.coords[2][k]]
    }

    /// Point `k` of an S³ immersion (fourth coordinate zero in R³).
    pub fn point4(&self, k: usize) -> [f64; 4] {
        let w = if self.coords.len() == 4 { self.coords[3][k] } else { 0.0 };
        [self.coords[0][k], self.coords[1][k], self.coords[2][k], w]
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Applies `f` to every R³ point, keeping the grid.
    pub fn map_points(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self> {
        let pts: Vec<[f64; 3]> = (0..self.len()).map(|k| f(self.point(k))).collect();
        Self::from_points(self.grid, &pts)
    }

    /// Largest pointwise Euclidean distance to another immersion on the same grid.
    pub fn max_distance(&self, other: &Immersion) -> Result<f64> {
        if self.grid != other.grid || self.ambient != other.ambient {
            return Err(Error::GridMismatch);
        }
        Ok((0..self.len())
            .map(|k| {
                self.coords
                    .iter()
                    .zip(&other.coords)
                    .map(|(a, b)| (a[k] - b[k]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max))
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.len())
            .map(|k| self.coords.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Torus of revolution about the z-axis:
/// `((R + r cos v) cos u, (R + r cos v) sin u, r sin v)`.
pub fn revolution_torus(major: f64, minor: f64, grid: ParamGrid) -> Result<Immersion> {
    if !(minor > 0.0 && major > minor && major.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "revolution torus needs R > r > 0, got R = {major}, r = {minor}"
        )));
    }
    if !grid.has_periods(TAU, TAU) {
        return Err(Error::InvalidGrid("revolution torus needs periods (2π, 2π)".into()));
    }
    Immersion::from_fn(grid, |u, v| {
        let rho = major + minor * v.cos();
        [rho * u.cos(), rho * u.sin(), minor * v.sin()]
    })
}

/// The Clifford torus `T_Cl`: revolution torus with radii `√2` and `1`.
pub fn clifford_torus(grid: ParamGrid) -> Result<Immersion> {
    revolution_torus(SQRT_2, 1.0, grid)
}

/// `(cos √2u, sin √2u, cos √2v, sin √2v)/√2`, the flat Clifford torus in S³.
pub fn clifford_torus_s3(grid: ParamGrid) -> Result<Immersion> {
    let p = SQRT_2 * PI;
    if !grid.has_periods(p, p) {
        return Err(Error::InvalidGrid("Clifford chart needs periods (√2π, √2π)".into()));
    }
    let mut coords = (0..4).map(|_| Vec::with_capacity(grid.len())).collect::<Vec<_>>();
    for (u, v) in grid.points() {
        let (a, b) = (SQRT_2 * u, SQRT_2 * v);
        coords[0].push(FRAC_1_SQRT_2 * a.cos());
        coords[1].push(FRAC_1_SQRT_2 * a.sin());
        coords[2].push(FRAC_1_SQRT_2 * b.cos());
        coords[3].push(FRAC_1_SQRT_2 * b.sin());
    }
    Immersion::new(grid, Ambient::S3, coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clifford_point_at_origin_of_chart() {
        let t = clifford_torus(ParamGrid::torus(16).unwrap()).unwrap();
        let p = t.point(0);
        assert!((p[0] - (SQRT_2 + 1.0)).abs() < 1e-15);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn revolution_torus_rejects_degenerate_radii() {
        let g = ParamGrid::torus(16).unwrap();
        assert!(revolution_torus(1.0, 2.0, g).is_err());
        assert!(revolution_torus(1.0, 1.0, g).is_err());
        assert!(revolution_torus(2.0, 1.0, ParamGrid::clifford_chart(16).unwrap()).is_err());
    }

    #[test]
    fn clifford_s3_on_unit_sphere_and_checks_periods() {
        let t = clifford_torus_s3(ParamGrid::clifford_chart(16).unwrap()).unwrap();
        for k in 0..t.len() {
            let n: f64 = t.point4(k).iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
        assert!(clifford_torus_s3(ParamGrid::torus(16).unwrap()).is_err());
    }
}
