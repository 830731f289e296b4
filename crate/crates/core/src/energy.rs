//! Willmore energy and its first variation.

use crate::error::Result;
use crate::geometry::{geometry, laplace_beltrami, GeometryCache};
use crate::grid::ScalarField;
use crate::immersion::{Ambient, Immersion};

/// Ratio between the true first variation and `ΔH + |A°|²H`:
/// `d/dt W(f + tφν)|₀ = GRADIENT_DUALITY · ∫ (ΔH + |A°|²H) φ dμ`.
///
/// The value follows from the sign conventions of [`crate::geometry`]
/// (outward normal, `A_ij = -∂_ij f · ν`). It is checked against central
/// differences of the energy in the tests, on several grids.
pub const GRADIENT_DUALITY: f64 = -1.0;

/// `∫ H² dμ` in R³, `∫ (1 + H²) dμ` in S³. The S³ value equals the R³ energy
/// of the stereographic image.
pub fn willmore_energy(im: &Immersion) -> Result<f64> {
    Ok(energy_from_geometry(&geometry(im)?))
}

pub fn energy_from_geometry(geo: &GeometryCache) -> f64 {
    let shift = match geo.ambient() {
        Ambient::R3 => 0.0,
        Ambient::S3 => 1.0,
    };
    geo.mean_curvature
        .iter()
        .zip(&geo.area_element)
        .map(|(h, a)| (shift + h * h) * a)
        .sum::<f64>()
        * geo.grid().cell_area()
}

/// The Willmore operator `W' = ΔH + |A°|²H` as a scalar field.
pub fn willmore_gradient(im: &Immersion) -> Result<ScalarField> {
    willmore_operator(&geometry(im)?)
}

pub fn willmore_operator(geo: &GeometryCache) -> Result<ScalarField> {
    let h = geo.mean_curvature_field();
    let lap = laplace_beltrami(geo, &h)?;
    let values = lap
        .values()
        .iter()
        .zip(&geo.tracefree_sq)
        .zip(&geo.mean_curvature)
        .map(|((l, a2), h)| l + a2 * h)
        .collect();
    ScalarField::new(*geo.grid(), values)
}

/// The L²(dμ) gradient of `W` with respect to normal speed:
/// `GRADIENT_DUALITY · W'`.
pub fn l2_gradient(geo: &GeometryCache) -> Result<ScalarField> {
    Ok(willmore_operator(geo)?.scale(GRADIENT_DUALITY))
}

/// `(∫ φ² dμ)^{1/2}`.
pub fn l2_norm(geo: &GeometryCache, phi: &ScalarField) -> Result<f64> {
    Ok(geo.inner(phi, phi)?.max(0.0).sqrt())
}
