//! The Möbius kernel seen from the R³ Clifford torus `T_Cl`.
//!
//! Stereographic projection identifies `T_Cl` with the flat Clifford torus of
//! S³. A normal speed `w` on `T_Cl` corresponds to the S³ normal speed `ρ w`,
//! where `ρ = 2 / (1 + |p|²)` is the conformal factor, and `dμ_S³ = ρ² dμ_R³`.
//! Kernel coefficients of R³ fields are therefore taken as
//! `c_i = h_i ∫ ρ³ w k_i dμ_R³`, against the orthonormal kernel basis `k_i` of
//! [`crate::clifford`] evaluated at the chart angles of each grid point, and
//! the R³ kernel fields are `k_i / ρ`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::rc::Rc;

use nalgebra::DMatrix;

use crate::clifford::{kernel_function, kernel_mu, kernel_norm, sobolev_weight, KERNEL_DIM};
use crate::error::{Error, Result};
use crate::geometry::{geometry, GeometryCache};
use crate::grid::{ParamGrid, ScalarField};
use crate::immersion::{clifford_torus, Immersion};
use crate::mobius::{normal_component, stereo_conformal_factor, stereo_to_s3, ConformalField, MobiusMap, Primitive};

pub const GENERATOR_COUNT: usize = 10;

thread_local! {
    static FRAMES: RefCell<BTreeMap<(usize, usize), Rc<KernelFrame>>> = const { RefCell::new(BTreeMap::new()) };
}

#[derive(Debug)]
pub struct KernelFrame {
    base: Immersion,
    geo: GeometryCache,
    /// `ρ³ √det g du dv`
    quad: Vec<f64>,
    /// Normalized kernel functions at the chart angles of each grid point.
    chart_values: Vec<Vec<f64>>,
    inv_rho: Vec<f64>,
    generators: Vec<ScalarField>,
    /// Discrete Gram matrix of the kernel fields; makes the projector exactly idempotent.
    gram_inverse: DMatrix<f64>,
    /// Minimum-norm generator weights reproducing each kernel field (10 × 8).
    to_generators: DMatrix<f64>,
    fit_residual: f64,
}

impl KernelFrame {
    /// Shared per thread and grid shape.
    pub fn for_grid(grid: &ParamGrid) -> Result<Rc<Self>> {
        let key = (grid.n_u(), grid.n_v());
        if let Some(f) = FRAMES.with(|m| m.borrow().get(&key).cloned()) {
            if f.grid() == grid {
                return Ok(f);
            }
        }
        let frame = Rc::new(Self::new(*grid)?);
        FRAMES.with(|m| m.borrow_mut().insert(key, frame.clone()));
        Ok(frame)
    }

    pub fn new(grid: ParamGrid) -> Result<Self> {
        if !grid.has_periods(TAU, TAU) {
            return Err(Error::InvalidGrid("kernel frame needs a (2π, 2π) torus grid".into()));
        }
        let base = clifford_torus(grid)?;
        let geo = geometry(&base)?;
        let n = grid.len();
        let cell = grid.cell_area();
        let mut quad = Vec::with_capacity(n);
        let mut inv_rho = Vec::with_capacity(n);
        let mut chart_values = (0..KERNEL_DIM).map(|_| Vec::with_capacity(n)).collect::<Vec<_>>();
        for k in 0..n {
            let p = base.point(k);
            let rho = stereo_conformal_factor(p);
            quad.push(rho.powi(3) * geo.area_element[k] * cell);
            inv_rho.push(1.0 / rho);
            let y = stereo_to_s3(p);
            let (a, b) = (y[1].atan2(y[0]), y[3].atan2(y[2]));
            for (i, col) in chart_values.iter_mut().enumerate() {
                col.push(kernel_function(i, a, b) / kernel_norm(i));
            }
        }
        let mut gram = DMatrix::zeros(KERNEL_DIM, KERNEL_DIM);
        for i in 0..KERNEL_DIM {
            for j in 0..KERNEL_DIM {
                let s: f64 = (0..n).map(|k| quad[k] * inv_rho[k] * chart_values[i][k] * chart_values[j][k]).sum();
                gram[(i, j)] = sobolev_weight(kernel_mu(i)) * s;
            }
        }
        let gram_inverse = gram
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("singular kernel Gram matrix".into()))?;
        let generators = ConformalField::all()
            .iter()
            .map(|&f| normal_component(f, &base, &geo))
            .collect::<Result<Vec<_>>>()?;

        let g = DMatrix::from_fn(n, GENERATOR_COUNT, |r, c| generators[c].values()[r]);
        let e = DMatrix::from_fn(n, KERNEL_DIM, |r, c| chart_values[c][r] * inv_rho[r]);
        let svd = g.clone().svd(true, true);
        let top = svd.singular_values.max();
        let to_generators = svd
            .solve(&e, 1e-8 * top)
            .map_err(|e| Error::InvalidParameter(format!("generator fit failed: {e}")))?;
        let fit_residual = (&g * &to_generators - &e).amax();

        Ok(Self { base, geo, quad, chart_values, inv_rho, gram_inverse, generators, to_generators, fit_residual })
    }

    pub fn grid(&self) -> &ParamGrid {
        self.base.grid()
    }

    /// The Clifford torus sampled on the frame grid.
    pub fn base(&self) -> &Immersion {
        &self.base
    }

    pub fn geometry(&self) -> &GeometryCache {
        &self.geo
    }

    /// Normal speeds of the ten conformal fields, ordered as [`ConformalField::all`].
    pub fn generator_fields(&self) -> &[ScalarField] {
        &self.generators
    }

    /// Largest pointwise misfit of the kernel fields by generator normal speeds.
    pub fn fit_residual(&self) -> f64 {
        self.fit_residual
    }

    pub fn coefficients(&self, w: &ScalarField) -> Result<[f64; KERNEL_DIM]> {
        if w.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        let raw = nalgebra::DVector::from_fn(KERNEL_DIM, |i, _| {
            let s: f64 = w
                .values()
                .iter()
                .zip(&self.quad)
                .zip(&self.chart_values[i])
                .map(|((x, q), k)| x * q * k)
                .sum();
            sobolev_weight(kernel_mu(i)) * s
        });
        let c = &self.gram_inverse * raw;
        Ok(std::array::from_fn(|i| c[i]))
    }

    pub fn kernel_field(&self, c: &[f64; KERNEL_DIM]) -> ScalarField {
        let values = (0..self.grid().len())
            .map(|k| self.inv_rho[k] * (0..KERNEL_DIM).map(|i| c[i] * self.chart_values[i][k]).sum::<f64>())
            .collect();
        ScalarField::new(*self.grid(), values).expect("grid-sized")
    }

    pub fn project_k(&self, w: &ScalarField) -> Result<ScalarField> {
        Ok(self.kernel_field(&self.coefficients(w)?))
    }

    pub fn project_kperp(&self, w: &ScalarField) -> Result<ScalarField> {
        w.sub(&self.project_k(w)?)
    }

    /// Generator weights whose normal speed on `T_Cl` is the kernel field of `c`.
    pub fn generator_weights(&self, c: &[f64; KERNEL_DIM]) -> [f64; GENERATOR_COUNT] {
        let v = &self.to_generators * nalgebra::DVector::from_column_slice(c);
        std::array::from_fn(|j| v[j])
    }

    /// Kernel coefficients of the normal speed of a generator combination.
    pub fn coefficients_of_generators(&self, beta: &[f64; GENERATOR_COUNT]) -> [f64; KERNEL_DIM] {
        let mut w = ScalarField::zeros(*self.grid());
        for (b, g) in beta.iter().zip(&self.generators) {
            for (o, x) in w.values_mut().iter_mut().zip(g.values()) {
                *o += b * x;
            }
        }
        self.coefficients(&w).expect("frame grid")
    }
}

/// Finite Möbius map generated by the kernel element `t·c`:
/// special conformal part first, then dilation, rotation and translation.
pub fn mobius_from_kernel(frame: &KernelFrame, c: &[f64; KERNEL_DIM], t: f64) -> MobiusMap {
    mobius_from_generators(&frame.generator_weights(c).map(|b| t * b))
}

/// Möbius map for generator weights ordered as [`ConformalField::all`].
pub fn mobius_from_generators(beta: &[f64; GENERATOR_COUNT]) -> MobiusMap {
    let mut map = MobiusMap::identity();
    let sct = [beta[7], beta[8], beta[9]];
    if sct.iter().any(|&x| x != 0.0) {
        map = MobiusMap::compose(&MobiusMap::special_conformal(sct.map(|x| 0.5 * x)), &map);
    }
    if beta[6] != 0.0 {
        map = map.then(Primitive::Dilation(beta[6].exp()));
    }
    let omega = [beta[3], beta[4], beta[5]];
    let angle = omega.iter().map(|x| x * x).sum::<f64>().sqrt();
    if angle > 0.0 {
        map = map.then(Primitive::Rotation { axis: omega.map(|x| x / angle), angle });
    }
    let shift = [beta[0], beta[1], beta[2]];
    if shift.iter().any(|&x| x != 0.0) {
        map = map.then(Primitive::Translation(shift));
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame() -> Rc<KernelFrame> {
        KernelFrame::for_grid(&ParamGrid::torus(32).unwrap()).unwrap()
    }

    #[test]
    fn kernel_fields_are_generator_normal_speeds() {
        // the conformal-factor transport is exact only with the ρ⁻¹ scaling
        assert!(frame().fit_residual() < 1e-10, "{}", frame().fit_residual());
    }

    #[test]
    fn coefficients_invert_kernel_fields() {
        let f = frame();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c: [f64; KERNEL_DIM] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let back = f.coefficients(&f.kernel_field(&c)).unwrap();
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
        let w = ScalarField::from_fn(*f.grid(), |u, v| (2.0 * u).cos() * v.sin() + 0.3);
        let perp = f.project_kperp(&w).unwrap();
        assert!(f.coefficients(&perp).unwrap().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn every_generator_lies_in_the_kernel() {
        let f = frame();
        for (j, g) in f.generator_fields().iter().enumerate() {
            let residual = f.project_kperp(g).unwrap().max_abs();
            assert!(residual < 1e-12, "generator {j}: {residual}");
        }
    }

    #[test]
    fn translation_weights_give_translation() {
        let mut beta = [0.0; GENERATOR_COUNT];
        beta[2] = 0.3;
        let map = mobius_from_generators(&beta);
        assert_eq!(map.primitives(), &[Primitive::Translation([0.0, 0.0, 0.3])]);
        assert!(mobius_from_generators(&[0.0; GENERATOR_COUNT]).is_identity());
    }
}
