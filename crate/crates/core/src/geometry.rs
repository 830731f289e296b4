//! Pointwise differential geometry of sampled immersions.
//!
//! All parameter derivatives are spectral. The unit normal of an R³ immersion
//! is `f_u × f_v / |f_u × f_v|`, which is the outward normal for
//! [`revolution_torus`](crate::immersion::revolution_torus). The second
//! fundamental form is `A_ij = -∂_ij f · ν`, so that `H = ½ g^ij A_ij` is
//! positive on the outer equator of a revolution torus. For S³ immersions the
//! normal is tangent to S³ and orthogonal to `f_u`, `f_v`; because `ν · f = 0`
//! the same formula for `A_ij` yields the second fundamental form of the
//! surface inside S³.

use crate::error::{Error, Result};
use crate::grid::{ParamGrid, ScalarField};
use crate::immersion::{Ambient, Immersion};
use crate::spectral::Spectral2d;

/// Degenerate-metric threshold relative to the mean of `det g`.
pub const DEGENERACY_RATIO: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GeometryCache {
    grid: ParamGrid,
    ambient: Ambient,
    pub(crate) f_u: Vec<Vec<f64>>,
    pub(crate) f_v: Vec<Vec<f64>>,
    pub(crate) normal: Vec<Vec<f64>>,
    /// Metric `(g_uu, g_uv, g_vv)` per point.
    pub metric: Vec<[f64; 3]>,
    /// Inverse metric `(g^uu, g^uv, g^vv)` per point.
    pub inverse_metric: Vec<[f64; 3]>,
    /// `√det g`.
    pub area_element: Vec<f64>,
    /// `(A_uu, A_uv, A_vv)` per point.
    pub second_form: Vec<[f64; 3]>,
    pub mean_curvature: Vec<f64>,
    /// `|A|²`
    pub second_form_sq: Vec<f64>,
    /// `|A°|² = |A|² - 2H²`
    pub tracefree_sq: Vec<f64>,
    /// Extrinsic Gauss curvature `det A / det g` (equal to the intrinsic one in R³).
    pub gauss_curvature: Vec<f64>,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Vector of R⁴ orthogonal to `a`, `b`, `c` (cofactor expansion).
fn cross4(a: [f64; 4], b: [f64; 4], c: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        let cols: Vec<usize> = (0..4).filter(|&j| j != i).collect();
        let m = [
            [a[cols[0]], a[cols[1]], a[cols[2]]],
            [b[cols[0]], b[cols[1]], b[cols[2]]],
            [c[cols[0]], c[cols[1]], c[cols[2]]],
        ];
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *o = sign * det3(m);
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Computes the full geometry cache of an immersion.
#[allow(clippy::needless_range_loop)]
pub fn geometry(im: &Immersion) -> Result<GeometryCache> {
    let grid = *im.grid();
    let sp = Spectral2d::for_grid(&grid);
    let dim = im.ambient().dim();
    let n = grid.len();

    let mut f_u = Vec::with_capacity(dim);
    let mut f_v = Vec::with_capacity(dim);
    let mut f_uu = Vec::with_capacity(dim);
    let mut f_uv = Vec::with_capacity(dim);
    let mut f_vv = Vec::with_capacity(dim);
    for c in im.coords() {
        let hat = sp.forward(c);
        f_u.push(sp.derivative(&hat, 1, 0));
        f_v.push(sp.derivative(&hat, 0, 1));
        f_uu.push(sp.derivative(&hat, 2, 0));
        f_uv.push(sp.derivative(&hat, 1, 1));
        f_vv.push(sp.derivative(&hat, 0, 2));
    }

    let at = |comps: &Vec<Vec<f64>>, k: usize| -> Vec<f64> { comps.iter().map(|c| c[k]).collect() };

    let mut metric = Vec::with_capacity(n);
    let mut dets = Vec::with_capacity(n);
    for k in 0..n {
        let (xu, xv) = (at(&f_u, k), at(&f_v, k));
        let g = [dot(&xu, &xu), dot(&xu, &xv), dot(&xv, &xv)];
        dets.push(g[0] * g[2] - g[1] * g[1]);
        metric.push(g);
    }
    let mean_det = dets.iter().sum::<f64>() / n as f64;
    if let Some((index, &det)) = dets
        .iter()
        .enumerate()
        .find(|(_, &d)| d.partial_cmp(&(DEGENERACY_RATIO * mean_det)) != Some(std::cmp::Ordering::Greater) || !d.is_finite())
    {
        return Err(Error::ImmersionDegenerate { index, det, mean: mean_det });
    }

    let mut normal = vec![Vec::with_capacity(n); dim];
    let mut cache = GeometryCache {
        grid,
        ambient: im.ambient(),
        f_u: Vec::new(),
        f_v: Vec::new(),
        normal: Vec::new(),
        metric,
        inverse_metric: Vec::with_capacity(n),
        area_element: Vec::with_capacity(n),
        second_form: Vec::with_capacity(n),
        mean_curvature: Vec::with_capacity(n),
        second_form_sq: Vec::with_capacity(n),
        tracefree_sq: Vec::with_capacity(n),
        gauss_curvature: Vec::with_capacity(n),
    };

    for k in 0..n {
        let (xu, xv) = (at(&f_u, k), at(&f_v, k));
        let nu: Vec<f64> = match im.ambient() {
            Ambient::R3 => {
                let c = cross([xu[0], xu[1], xu[2]], [xv[0], xv[1], xv[2]]);
                let len = dot(&c, &c).sqrt();
                c.iter().map(|x| x / len).collect()
            }
            Ambient::S3 => {
                let p = im.point4(k);
                let c = cross4([xu[0], xu[1], xu[2], xu[3]], [xv[0], xv[1], xv[2], xv[3]], p);
                let len = dot(&c, &c).sqrt();
                c.iter().map(|x| x / len).collect()
            }
        };
        let g = cache.metric[k];
        let det = dets[k];
        let gi = [g[2] / det, -g[1] / det, g[0] / det];
        let a = [
            -dot(&at(&f_uu, k), &nu),
            -dot(&at(&f_uv, k), &nu),
            -dot(&at(&f_vv, k), &nu),
        ];
        let h = 0.5 * (gi[0] * a[0] + 2.0 * gi[1] * a[1] + gi[2] * a[2]);
        // |A|² = tr((g⁻¹A)²)
        let s = [
            [gi[0] * a[0] + gi[1] * a[1], gi[0] * a[1] + gi[1] * a[2]],
            [gi[1] * a[0] + gi[2] * a[1], gi[1] * a[1] + gi[2] * a[2]],
        ];
        let a_sq = s[0][0] * s[0][0] + 2.0 * s[0][1] * s[1][0] + s[1][1] * s[1][1];
        for (c, x) in normal.iter_mut().zip(&nu) {
            c.push(*x);
        }
        cache.inverse_metric.push(gi);
        cache.area_element.push(det.sqrt());
        cache.second_form.push(a);
        cache.mean_curvature.push(h);
        cache.second_form_sq.push(a_sq);
        cache.tracefree_sq.push(a_sq - 2.0 * h * h);
        cache.gauss_curvature.push((a[0] * a[2] - a[1] * a[1]) / det);
    }
    cache.f_u = f_u;
    cache.f_v = f_v;
    cache.normal = normal;
    Ok(cache)
}

impl GeometryCache {
    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    /// Unit normal components, `normal()[c][k]`.
    pub fn normal(&self) -> &[Vec<f64>] {
        &self.normal
    }

    pub fn normal_at(&self, k: usize) -> [f64; 3] {
        [self.normal[0][k], self.normal[1][k], self.normal[2][k]]
    }

    pub fn normal4_at(&self, k: usize) -> [f64; 4] {
        let w = if self.normal.len() == 4 { self.normal[3][k] } else { 0.0 };
        [self.normal[0][k], self.normal[1][k], self.normal[2][k], w]
    }

    pub fn tangent_u(&self, k: usize) -> [f64; 3] {
        [self.f_u[0][k], self.f_u[1][k], self.f_u[2][k]]
    }

    pub fn tangent_v(&self, k: usize) -> [f64; 3] {
        [self.f_v[0][k], self.f_v[1][k], self.f_v[2][k]]
    }

    /// Quadrature weights `√det g · du · dv`.
    pub fn weights(&self) -> Vec<f64> {
        let cell = self.grid.cell_area();
        self.area_element.iter().map(|a| a * cell).collect()
    }

    pub fn area(&self) -> f64 {
        self.area_element.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// `∫ φ dμ`.
    pub fn integrate(&self, phi: &ScalarField) -> Result<f64> {
        if *phi.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(phi.values().iter().zip(&self.area_element).map(|(p, a)| p * a).sum::<f64>()
            * self.grid.cell_area())
    }

    /// `∫ φ ψ dμ`.
    pub fn inner(&self, phi: &ScalarField, psi: &ScalarField) -> Result<f64> {
        self.integrate(&phi.zip_with(psi, |a, b| a * b)?)
    }

    pub fn mean_curvature_field(&self) -> ScalarField {
        ScalarField::new(self.grid, self.mean_curvature.clone()).expect("grid-sized")
    }

    /// Largest absolute principal curvature over the grid.
    pub fn max_principal_curvature(&self) -> f64 {
        self.mean_curvature
            .iter()
            .zip(&self.gauss_curvature)
            .map(|(&h, &kg)| h.abs() + (h * h - kg).max(0.0).sqrt())
            .fold(0.0, f64::max)
    }

    /// Metric gradient `g(∇φ, ∇ψ)`.
    pub fn gradient_dot(&self, phi: &ScalarField, psi: &ScalarField) -> Result<ScalarField> {
        if *phi.grid() != self.grid || *psi.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let sp = Spectral2d::for_grid(&self.grid);
        let (hp, hq) = (sp.forward(phi.values()), sp.forward(psi.values()));
        let (pu, pv) = (sp.derivative(&hp, 1, 0), sp.derivative(&hp, 0, 1));
        let (qu, qv) = (sp.derivative(&hq, 1, 0), sp.derivative(&hq, 0, 1));
        let values = (0..self.grid.len())
            .map(|k| {
                let gi = self.inverse_metric[k];
                gi[0] * pu[k] * qu[k] + gi[1] * (pu[k] * qv[k] + pv[k] * qu[k]) + gi[2] * pv[k] * qv[k]
            })
            .collect();
        ScalarField::new(self.grid, values)
    }
}

/// Laplace–Beltrami operator `Δφ = (det g)^{-1/2} ∂_i(√det g g^ij ∂_j φ)`.
pub fn laplace_beltrami(geo: &GeometryCache, phi: &ScalarField) -> Result<ScalarField> {
    if *phi.grid() != geo.grid {
        return Err(Error::GridMismatch);
    }
    let sp = Spectral2d::for_grid(&geo.grid);
    let hat = sp.forward(phi.values());
    let (pu, pv) = (sp.derivative(&hat, 1, 0), sp.derivative(&hat, 0, 1));
    let n = geo.grid.len();
    let mut flux_u = Vec::with_capacity(n);
    let mut flux_v = Vec::with_capacity(n);
    for k in 0..n {
        let gi = geo.inverse_metric[k];
        let s = geo.area_element[k];
        flux_u.push(s * (gi[0] * pu[k] + gi[1] * pv[k]));
        flux_v.push(s * (gi[1] * pu[k] + gi[2] * pv[k]));
    }
    let du = sp.derivative(&sp.forward(&flux_u), 1, 0);
    let dv = sp.derivative(&sp.forward(&flux_v), 0, 1);
    let values = (0..n).map(|k| (du[k] + dv[k]) / geo.area_element[k]).collect();
    ScalarField::new(geo.grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::{clifford_torus, clifford_torus_s3, revolution_torus};
    use std::f64::consts::SQRT_2;

    #[test]
    fn revolution_torus_mean_curvature_matches_classical_formula() {
        let (big, small) = (SQRT_2, 1.0);
        let grid = ParamGrid::torus(32).unwrap();
        let geo = geometry(&revolution_torus(big, small, grid).unwrap()).unwrap();
        // H = ½ (1/r + cos v / (R + r cos v))
        for (k, (_, v)) in grid.points().enumerate() {
            let h = 0.5 * (1.0 / small + v.cos() / (big + small * v.cos()));
            assert!((geo.mean_curvature[k] - h).abs() < 1e-12, "k={k}");
            let kg = v.cos() / (small * (big + small * v.cos()));
            assert!((geo.gauss_curvature[k] - kg).abs() < 1e-12);
        }
        assert!((geo.mean_curvature[0] - 0.5 * (1.0 + 1.0 / (SQRT_2 + 1.0))).abs() < 1e-13);
    }

    #[test]
    fn outward_normal_on_revolution_torus() {
        let grid = ParamGrid::torus(16).unwrap();
        let geo = geometry(&clifford_torus(grid).unwrap()).unwrap();
        for (k, (u, v)) in grid.points().enumerate() {
            let e = [v.cos() * u.cos(), v.cos() * u.sin(), v.sin()];
            let nu = geo.normal_at(k);
            assert!((0..3).all(|c| (nu[c] - e[c]).abs() < 1e-13));
        }
    }

    #[test]
    fn clifford_s3_is_flat_minimal_with_unit_principal_curvatures() {
        let grid = ParamGrid::clifford_chart(16).unwrap();
        let im = clifford_torus_s3(grid).unwrap();
        let geo = geometry(&im).unwrap();
        for k in 0..grid.len() {
            let g = geo.metric[k];
            assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12 && (g[2] - 1.0).abs() < 1e-12);
            assert!((geo.second_form_sq[k] - 2.0).abs() < 1e-10);
            assert!(geo.mean_curvature[k].abs() < 1e-10);
            let p = im.point4(k);
            let nu = geo.normal4_at(k);
            assert!(p.iter().zip(&nu).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn tracefree_identity_and_rotation_invariance() {
        let grid = ParamGrid::torus(24).unwrap();
        let im = revolution_torus(2.0, 0.7, grid).unwrap();
        let geo = geometry(&im).unwrap();
        for k in 0..grid.len() {
            let h = geo.mean_curvature[k];
            assert!(geo.tracefree_sq[k] >= -1e-10);
            assert!((geo.tracefree_sq[k] - 2.0 * (h * h - geo.gauss_curvature[k])).abs() < 1e-8);
        }
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rotated = im.map_points(|p| [c * p[0] - s * p[2], p[1], s * p[0] + c * p[2]]).unwrap();
        let geo_r = geometry(&rotated).unwrap();
        for k in 0..grid.len() {
            assert!((geo.mean_curvature[k] - geo_r.mean_curvature[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_immersion_is_rejected() {
        let grid = ParamGrid::torus(16).unwrap();
        // collapses the v circle at u = π
        let im = Immersion::from_fn(grid, |u, v| {
            let r = 0.5 * (1.0 + u.cos());
            [(2.0 + r * v.cos()) * u.cos(), (2.0 + r * v.cos()) * u.sin(), r * v.sin()]
        })
        .unwrap();
        assert!(matches!(geometry(&im), Err(Error::ImmersionDegenerate { .. })));
    }

    #[test]
    fn laplacian_of_constant_vanishes_and_leibniz_holds() {
        let grid = ParamGrid::torus(32).unwrap();
        let geo = geometry(&revolution_torus(1.8, 0.6, grid).unwrap()).unwrap();
        let one = ScalarField::constant(grid, 1.0);
        assert!(laplace_beltrami(&geo, &one).unwrap().max_abs() < 1e-12);
        let phi = ScalarField::from_fn(grid, |u, v| (u.sin() * v.cos()).exp());
        let psi = ScalarField::from_fn(grid, |u, v| (2.0 * u).cos() + (v + u).sin());
        let prod = phi.zip_with(&psi, |a, b| a * b).unwrap();
        let lhs = laplace_beltrami(&geo, &prod).unwrap();
        let lp = laplace_beltrami(&geo, &phi).unwrap();
        let lq = laplace_beltrami(&geo, &psi).unwrap();
        let gd = geo.gradient_dot(&phi, &psi).unwrap();
        for k in 0..grid.len() {
            let rhs = phi.values()[k] * lq.values()[k] + psi.values()[k] * lp.values()[k] + 2.0 * gd.values()[k];
            assert!((lhs.values()[k] - rhs).abs() < 1e-8);
        }
    }

    #[test]
    fn flat_chart_laplacian_eigenvalue_two() {
        let grid = ParamGrid::clifford_chart(16).unwrap();
        let geo = geometry(&clifford_torus_s3(grid).unwrap()).unwrap();
        let phi = ScalarField::from_fn(grid, |u, _| (SQRT_2 * u).cos());
        let lap = laplace_beltrami(&geo, &phi).unwrap();
        for k in 0..grid.len() {
            assert!((lap.values()[k] + 2.0 * phi.values()[k]).abs() < 1e-11);
        }
        // refined second differences of the same function agree
        let h = 1e-4;
        let u0 = 0.37;
        let fd = ((SQRT_2 * (u0 + h)).cos() - 2.0 * (SQRT_2 * u0).cos() + (SQRT_2 * (u0 - h)).cos()) / (h * h);
        assert!((fd + 2.0 * (SQRT_2 * u0).cos()).abs() < 1e-6);
    }
}
