//! Second variation of the Willmore energy at the Clifford torus, in the flat
//! chart of `(1/√2)(S¹ × S¹) ⊂ S³`.
//!
//! On that chart `|A|² = 2` and the Laplacian is the flat one, so the form
//! `∫ (Δ + 2)u · (Δ + 4)v dμ` is diagonal in Fourier modes: mode `(m, n)` has
//! Laplace eigenvalue `μ = 2(m² + n²)` and form eigenvalue `σ = (2 - μ)(4 - μ)`.
//! The kernel consists of the eight real modes with `μ ∈ {2, 4}`.
//!
//! Sobolev norms use the per-mode weight `(1 + μ)²`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::geometry;
use crate::grid::{ParamGrid, ScalarField};
use crate::immersion::clifford_torus_s3;
use crate::mobius::{stereo_to_r3, ConformalField};
use crate::spectral::Spectral2d;

pub const KERNEL_DIM: usize = 8;

/// Eigenvalue of `-Δ` on the flat chart.
pub fn laplace_eigenvalue(m: i64, n: i64) -> f64 {
    2.0 * (m * m + n * n) as f64
}

pub fn form_eigenvalue(mu: f64) -> f64 {
    (2.0 - mu) * (4.0 - mu)
}

pub fn sobolev_weight(mu: f64) -> f64 {
    (1.0 + mu).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub m: i64,
    pub n: i64,
    pub mu: f64,
    pub sigma: f64,
    pub weight: f64,
}

impl Mode {
    pub fn new(m: i64, n: i64) -> Self {
        let mu = laplace_eigenvalue(m, n);
        Self { m, n, mu, sigma: form_eigenvalue(mu), weight: sobolev_weight(mu) }
    }

    pub fn in_kernel(&self) -> bool {
        self.sigma == 0.0
    }

    pub fn ratio(&self) -> f64 {
        self.sigma / self.weight
    }
}

/// All modes with `|m|, |n| ≤ cutoff`, in lexicographic order.
pub fn mode_table(cutoff: usize) -> Vec<Mode> {
    let c = cutoff as i64;
    (-c..=c).flat_map(|m| (-c..=c).map(move |n| Mode::new(m, n))).collect()
}

/// `min σ/h` over non-kernel modes with `|m|, |n| ≤ cutoff`.
pub fn coercivity_lambda(cutoff: usize) -> Result<f64> {
    if cutoff < 3 {
        return Err(Error::InvalidParameter(format!("mode cutoff {cutoff} < 3")));
    }
    Ok(mode_table(cutoff)
        .iter()
        .filter(|m| !m.in_kernel())
        .map(Mode::ratio)
        .fold(f64::INFINITY, f64::min))
}

/// Names of the kernel basis fields in basis order, with `a = √2x`, `b = √2y`.
pub const KERNEL_LABELS: [&str; KERNEL_DIM] = [
    "cos a",
    "sin a",
    "cos b",
    "sin b",
    "cos a cos b",
    "cos a sin b",
    "sin a cos b",
    "sin a sin b",
];

/// Unnormalized kernel function `i` at chart angles `(a, b)`.
pub fn kernel_function(i: usize, a: f64, b: f64) -> f64 {
    match i {
        0 => a.cos(),
        1 => a.sin(),
        2 => b.cos(),
        3 => b.sin(),
        4 => a.cos() * b.cos(),
        5 => a.cos() * b.sin(),
        6 => a.sin() * b.cos(),
        7 => a.sin() * b.sin(),
        _ => panic!("kernel index {i} out of range"),
    }
}

/// Laplace eigenvalue of kernel function `i`.
pub fn kernel_mu(i: usize) -> f64 {
    if i < 4 {
        2.0
    } else {
        4.0
    }
}

/// Sobolev norm of kernel function `i` over the chart (area `2π²`).
pub fn kernel_norm(i: usize) -> f64 {
    if i < 4 {
        3.0 * PI
    } else {
        5.0 * PI / SQRT_2
    }
}

/// The Fourier picture of the second variation on an `n × n` flat chart grid.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    grid: ParamGrid,
    basis: Vec<ScalarField>,
}

impl SpectralModel {
    pub fn new(n: usize) -> Result<Self> {
        let grid = ParamGrid::clifford_chart(n)?;
        let basis = (0..KERNEL_DIM)
            .map(|i| {
                let s = 1.0 / kernel_norm(i);
                ScalarField::from_fn(grid, |x, y| s * kernel_function(i, SQRT_2 * x, SQRT_2 * y))
            })
            .collect();
        Ok(Self { grid, basis })
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    fn check(&self, u: &ScalarField) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `(Δ + 2)(Δ + 4) u` by Fourier multiplication.
    pub fn w2_apply(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check(u)?;
        let sp = Spectral2d::for_grid(&self.grid);
        let values = sp.apply_symbol(u.values(), |m, n| form_eigenvalue(laplace_eigenvalue(m, n)));
        ScalarField::new(self.grid, values)
    }

    /// `∫ (Δ + 2)u · (Δ + 4)v dμ` on the chart, by grid quadrature.
    pub fn w2_form(&self, u: &ScalarField, v: &ScalarField) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let sp = Spectral2d::for_grid(&self.grid);
        let lu = sp.apply_symbol(u.values(), |m, n| 2.0 - laplace_eigenvalue(m, n));
        let lv = sp.apply_symbol(v.values(), |m, n| 4.0 - laplace_eigenvalue(m, n));
        Ok(lu.iter().zip(&lv).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_area())
    }

    /// The same form evaluated as `Σ σ |û|²` over Fourier coefficients.
    pub fn w2_form_parseval(&self, u: &ScalarField) -> Result<f64> {
        self.weighted_parseval(u, u, form_eigenvalue)
    }

    fn weighted_parseval(&self, u: &ScalarField, v: &ScalarField, w: impl Fn(f64) -> f64) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let sp = Spectral2d::for_grid(&self.grid);
        let (uh, vh) = (sp.forward(u.values()), sp.forward(v.values()));
        let n_v = self.grid.n_v();
        let mut acc = 0.0;
        for (p, &m) in sp.mode_u().iter().enumerate() {
            for (q, &n) in sp.mode_v().iter().enumerate() {
                let k = p * n_v + q;
                acc += w(laplace_eigenvalue(m, n)) * (uh[k] * vh[k].conj()).re;
            }
        }
        let len = self.grid.len() as f64;
        Ok(acc * self.grid.cell_area() / len)
    }

    pub fn h2_inner(&self, u: &ScalarField, v: &ScalarField) -> Result<f64> {
        self.weighted_parseval(u, v, sobolev_weight)
    }

    pub fn h2_norm(&self, u: &ScalarField) -> Result<f64> {
        Ok(self.h2_inner(u, u)?.max(0.0).sqrt())
    }

    /// Orthonormal basis of the kernel, ordered as [`KERNEL_LABELS`].
    pub fn kernel_basis(&self) -> &[ScalarField] {
        &self.basis
    }

    pub fn kernel_coefficients(&self, u: &ScalarField) -> Result<[f64; KERNEL_DIM]> {
        let mut c = [0.0; KERNEL_DIM];
        for (ci, e) in c.iter_mut().zip(&self.basis) {
            *ci = self.h2_inner(u, e)?;
        }
        Ok(c)
    }

    pub fn kernel_field(&self, coeffs: &[f64; KERNEL_DIM]) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for (c, e) in coeffs.iter().zip(&self.basis) {
            for (o, x) in out.values_mut().iter_mut().zip(e.values()) {
                *o += c * x;
            }
        }
        out
    }

    pub fn project_k(&self, u: &ScalarField) -> Result<ScalarField> {
        Ok(self.kernel_field(&self.kernel_coefficients(u)?))
    }

    pub fn project_kperp(&self, u: &ScalarField) -> Result<ScalarField> {
        u.sub(&self.project_k(u)?)
    }

    /// Random smooth field with Fourier modes `|m|, |n| ≤ 4` and decaying amplitudes.
    pub fn random_field(&self, rng: &mut impl Rng) -> ScalarField {
        let mut terms = Vec::new();
        for m in 0..=4i64 {
            for n in -4..=4i64 {
                if m == 0 && n < 0 {
                    continue;
                }
                let amp = 1.0 / (1.0 + (m * m + n * n) as f64);
                terms.push((m, n, amp * rng.random_range(-1.0..1.0), amp * rng.random_range(-1.0..1.0)));
            }
        }
        ScalarField::from_fn(self.grid, |x, y| {
            terms
                .iter()
                .map(|&(m, n, c, s)| {
                    let ph = SQRT_2 * (m as f64 * x + n as f64 * y);
                    c * ph.cos() + s * ph.sin()
                })
                .sum()
        })
    }
}

/// Normal speeds on the S³ chart of the ten conformal fields of R³, carried
/// through stereographic projection: `w = ⟨dS(X), ν⟩` with `S` the map R³ → S³.
pub fn transported_generators(grid: &ParamGrid) -> Result<Vec<ScalarField>> {
    let chart = clifford_torus_s3(*grid)?;
    let geo = geometry(&chart)?;
    let mut fields = (0..10).map(|_| Vec::with_capacity(grid.len())).collect::<Vec<_>>();
    for k in 0..grid.len() {
        let y = chart.point4(k);
        let p = stereo_to_r3(y)?;
        let nu = geo.normal4_at(k);
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let d = 1.0 + r2;
        for (out, field) in fields.iter_mut().zip(ConformalField::all()) {
            let x = field.eval(p);
            let px = p[0] * x[0] + p[1] * x[1] + p[2] * x[2];
            // differential of stereo_to_s3 at p applied to x
            let mut dy = [0.0; 4];
            for i in 0..3 {
                dy[i] = 2.0 * x[i] / d - 4.0 * p[i] * px / (d * d);
            }
            dy[3] = 4.0 * px / (d * d);
            out.push((0..4).map(|i| dy[i] * nu[i]).sum());
        }
    }
    fields.into_iter().map(|v| ScalarField::new(*grid, v)).collect()
}

/// Numerical rank of a set of fields: singular values above `rel_tol · σ_max`.
pub fn numerical_rank(fields: &[ScalarField], rel_tol: f64) -> usize {
    let s = singular_values(fields);
    let top = s.iter().cloned().fold(0.0, f64::max);
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

fn field_matrix(fields: &[ScalarField]) -> DMatrix<f64> {
    let rows = fields.first().map_or(0, |f| f.values().len());
    DMatrix::from_fn(rows, fields.len(), |r, c| fields[c].values()[r])
}

fn singular_values(fields: &[ScalarField]) -> Vec<f64> {
    field_matrix(fields).singular_values().iter().cloned().collect()
}

/// Orthonormal basis (grid inner product) of the leading `dim` directions.
fn leading_basis(fields: &[ScalarField], dim: usize) -> DMatrix<f64> {
    let svd = field_matrix(fields).svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    DMatrix::from_fn(u.nrows(), dim, |r, c| u[(r, order[c])])
}

/// Principal angles (radians, ascending) between two subspaces given by
/// orthonormal columns, computed from the sines for accuracy near zero.
fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let residual = b - a * (a.transpose() * b);
    let mut angles: Vec<f64> = residual.singular_values().iter().map(|s| s.min(1.0).asin()).collect();
    angles.sort_by(f64::total_cmp);
    angles
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCrossCheck {
    pub n: usize,
    pub kernel_rank: usize,
    pub generator_rank: usize,
    pub principal_angles: Vec<f64>,
    pub joint_rank: usize,
    pub joint_rank_with_random: usize,
}

impl KernelCrossCheck {
    pub fn max_angle(&self) -> f64 {
        self.principal_angles.iter().cloned().fold(0.0, f64::max)
    }
}

/// Compares the Fourier kernel with the span of the transported conformal
/// generators on an `n × n` chart grid.
pub fn kernel_cross_check(n: usize, seed: u64) -> Result<KernelCrossCheck> {
    const RANK_TOL: f64 = 1e-8;
    let model = SpectralModel::new(n)?;
    let gens = transported_generators(model.grid())?;
    let kernel = model.kernel_basis().to_vec();
    let kernel_rank = numerical_rank(&kernel, RANK_TOL);
    let generator_rank = numerical_rank(&gens, RANK_TOL);
    let a = leading_basis(&kernel, kernel_rank);
    let b = leading_basis(&gens, generator_rank);
    let principal_angles = principal_angles(&a, &b);
    let mut joint = kernel.clone();
    joint.extend(gens.iter().cloned());
    let joint_rank = numerical_rank(&joint, RANK_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    joint.push(model.random_field(&mut rng));
    let joint_rank_with_random = numerical_rank(&joint, RANK_TOL);
    Ok(KernelCrossCheck { n, kernel_rank, generator_rank, principal_angles, joint_rank, joint_rank_with_random })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::laplace_beltrami;

    fn model() -> SpectralModel {
        SpectralModel::new(32).unwrap()
    }

    fn mode_field(grid: ParamGrid, m: f64, n: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| (SQRT_2 * (m * x + n * y)).cos())
    }

    #[test]
    fn kernel_modes_are_annihilated() {
        let sm = model();
        for (m, n) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)] {
            let u = mode_field(*sm.grid(), m, n);
            let e = sm.w2_apply(&u).unwrap().max_abs(); assert!(e < 1e-9, "{m} {n} {e}");
        }
    }

    #[test]
    fn constant_mode_has_eigenvalue_eight() {
        let sm = model();
        let one = ScalarField::constant(*sm.grid(), 1.0);
        let out = sm.w2_apply(&one).unwrap();
        assert!(out.values().iter().all(|x| (x - 8.0).abs() < 1e-12));
        assert!((sm.w2_form(&one, &one).unwrap() - 16.0 * PI * PI).abs() < 1e-9);
    }

    /// Oracle: `(Δ + 2)(Δ + 4)` assembled from two Laplace-Beltrami
    /// applications on the embedded chart geometry.
    #[test]
    fn eigenvalues_match_geometric_operator() {
        let sm = model();
        let geo = geometry(&clifford_torus_s3(*sm.grid()).unwrap()).unwrap();
        for (m, n) in [(0, 0), (1, 0), (2, 0), (2, 1), (1, 3), (3, 3), (0, 5)] {
            let u = mode_field(*sm.grid(), m as f64, n as f64);
            let lu = laplace_beltrami(&geo, &u).unwrap();
            let a = lu.add(&u.scale(4.0)).unwrap();
            let la = laplace_beltrami(&geo, &a).unwrap();
            let oracle = la.add(&a.scale(2.0)).unwrap();
            let sigma = form_eigenvalue(laplace_eigenvalue(m, n));
            let expected = u.scale(sigma);
            let err = oracle.sub(&expected).unwrap().max_abs();
            assert!(err <= 1e-9 * (1.0 + sigma.abs()), "({m},{n}): {err}");
        }
    }

    #[test]
    fn form_is_symmetric_semidefinite_and_matches_parseval() {
        let sm = model();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let u = sm.random_field(&mut rng);
            let v = sm.random_field(&mut rng);
            let (uv, vu) = (sm.w2_form(&u, &v).unwrap(), sm.w2_form(&v, &u).unwrap());
            assert!((uv - vu).abs() <= 1e-10 * (1.0 + uv.abs()));
            let uu = sm.w2_form(&u, &u).unwrap();
            assert!(uu >= 0.0);
            assert!((uu - sm.w2_form_parseval(&u).unwrap()).abs() <= 1e-9 * (1.0 + uu));
        }
    }

    #[test]
    fn kernel_basis_is_orthonormal() {
        let sm = model();
        let b = sm.kernel_basis();
        assert_eq!(b.len(), KERNEL_DIM);
        for i in 0..KERNEL_DIM {
            for j in 0..KERNEL_DIM {
                let g = sm.h2_inner(&b[i], &b[j]).unwrap();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g - e).abs() < 1e-12, "({i},{j}): {g}");
            }
            assert!(sm.w2_form(&b[i], &ScalarField::constant(*sm.grid(), 1.0)).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn projectors() {
        let sm = model();
        let k = sm.kernel_basis()[5].clone();
        assert!(sm.project_k(&k).unwrap().sub(&k).unwrap().max_abs() < 1e-13);
        let one = ScalarField::constant(*sm.grid(), 1.0);
        assert!(sm.project_kperp(&one).unwrap().sub(&one).unwrap().max_abs() < 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let u = sm.random_field(&mut rng);
            let pk = sm.project_k(&u).unwrap();
            let sum = pk.add(&sm.project_kperp(&u).unwrap()).unwrap();
            assert!(sum.sub(&u).unwrap().max_abs() < 1e-12);
            assert!(sm.project_k(&pk).unwrap().sub(&pk).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn zero_form_means_kernel() {
        let sm = model();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c: [f64; KERNEL_DIM] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let u = sm.kernel_field(&c);
        assert!(sm.w2_form(&u, &u).unwrap().abs() < 1e-10);
        let perp = sm.project_kperp(&u).unwrap();
        assert!(sm.h2_norm(&perp).unwrap() <= 1e-8 * sm.h2_norm(&u).unwrap());
    }

    #[test]
    fn coercivity_constant() {
        assert!((Mode::new(0, 0).ratio() - 8.0).abs() < 1e-15);
        assert!((Mode::new(2, 0).ratio() - 24.0 / 81.0).abs() < 1e-15);
        let lambda = coercivity_lambda(4).unwrap();
        assert!((lambda - 24.0 / 81.0).abs() < 1e-15);
        for m in 3..=16 {
            assert_eq!(coercivity_lambda(m).unwrap(), lambda);
        }
        assert!(coercivity_lambda(2).is_err());
        assert_eq!(mode_table(3).iter().filter(|m| m.in_kernel()).count(), KERNEL_DIM);
    }

    #[test]
    fn coercive_on_kperp() {
        let sm = model();
        let lambda = coercivity_lambda(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let v = sm.project_kperp(&sm.random_field(&mut rng)).unwrap();
            let n2 = sm.h2_inner(&v, &v).unwrap();
            assert!(sm.w2_form(&v, &v).unwrap() >= lambda * n2 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn generator_span_is_the_kernel() {
        let report = kernel_cross_check(32, 0).unwrap();
        assert_eq!(report.kernel_rank, 8);
        assert_eq!(report.generator_rank, 8);
        assert_eq!(report.joint_rank, 8);
        assert_eq!(report.joint_rank_with_random, 9);
        assert_eq!(report.principal_angles.len(), 8);
        assert!(report.max_angle() <= 1e-6, "{:?}", report.principal_angles);
    }
}
