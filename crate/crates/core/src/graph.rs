//! Normal graphs over a base surface and the decomposition of a surface near
//! the Clifford torus into a Möbius motion plus a graph orthogonal to the
//! Möbius kernel.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::KERNEL_DIM;
use crate::error::{Error, Result};
use crate::gauge::{mobius_from_kernel, KernelFrame};
use crate::geometry::{geometry, GeometryCache};
use crate::grid::{ParamGrid, ScalarField};
use crate::immersion::{Ambient, Immersion};
use crate::mobius::{random_mobius, MobiusMap};
use crate::spectral::{Interpolant, Spectral2d};

/// Offsets are limited to this fraction of the smallest curvature radius.
pub const FOCAL_FRACTION: f64 = 0.9;

pub const GRAPH_MAX_ITERATIONS: usize = 50;

fn focal_bound(geo: &GeometryCache) -> f64 {
    FOCAL_FRACTION / geo.max_principal_curvature()
}

/// `f + wν` in R³, `cos(w) f + sin(w) ν` in S³.
pub fn exp_normal(base: &Immersion, w: &ScalarField) -> Result<Immersion> {
    exp_normal_with(base, &geometry(base)?, w)
}

pub fn exp_normal_with(base: &Immersion, geo: &GeometryCache, w: &ScalarField) -> Result<Immersion> {
    if w.grid() != base.grid() || geo.grid() != base.grid() {
        return Err(Error::GridMismatch);
    }
    let bound = focal_bound(geo);
    let offset = w.max_abs();
    if offset >= bound {
        return Err(Error::FocalRadiusExceeded { offset, bound });
    }
    let coords = base
        .coords()
        .iter()
        .zip(geo.normal())
        .map(|(f, nu)| {
            f.iter()
                .zip(nu)
                .zip(w.values())
                .map(|((x, n), h)| match base.ambient() {
                    Ambient::R3 => x + h * n,
                    Ambient::S3 => h.cos() * x + h.sin() * n,
                })
                .collect()
        })
        .collect();
    Immersion::new(*base.grid(), base.ambient(), coords)
}

/// Heights of a target surface along the normal lines of a base surface.
#[derive(Debug, Clone)]
pub struct NormalGraph {
    pub height: ScalarField,
    /// Target parameters hit by each normal line.
    pub foot_points: Vec<(f64, f64)>,
    /// Largest `|target(q) - (p + wν)|` over the grid.
    pub residual: f64,
}

/// Intersects the normal line of `base` at every grid point with the spectral
/// interpolant of `target` by Newton iteration on `(s, t, w)`.
pub fn graph_over(base: &Immersion, target: &Immersion) -> Result<NormalGraph> {
    graph_over_with(base, &geometry(base)?, target)
}

pub fn graph_over_with(base: &Immersion, geo: &GeometryCache, target: &Immersion) -> Result<NormalGraph> {
    if base.ambient() != Ambient::R3 || target.ambient() != Ambient::R3 {
        return Err(Error::InvalidParameter("normal graphs are computed in R³".into()));
    }
    let bound = focal_bound(geo);
    let bg = *base.grid();
    let tg = *target.grid();
    let interp = Interpolant::new(&tg, target.coords());
    let scale = (tg.period_u() / bg.period_u(), tg.period_v() / bg.period_v());
    let mut heights = Vec::with_capacity(bg.len());
    let mut feet = Vec::with_capacity(bg.len());
    let mut residual: f64 = 0.0;
    for k in 0..bg.len() {
        let p = base.point(k);
        let nu = geo.normal_at(k);
        let (u, v) = bg.coords(k);
        let solved = newton_foot(&interp, p, nu, (u * scale.0, v * scale.1)).or_else(|| {
            let nearest = (0..tg.len())
                .min_by(|&a, &b| dist2(target.point(a), p).total_cmp(&dist2(target.point(b), p)))
                .expect("non-empty grid");
            newton_foot(&interp, p, nu, tg.coords(nearest))
        });
        let Some((s, t, w, r)) = solved else {
            return Err(Error::NotInNeighborhood {
                index: k,
                reason: format!("normal line solve did not converge in {GRAPH_MAX_ITERATIONS} iterations"),
            });
        };
        if w.abs() >= bound {
            return Err(Error::NotInNeighborhood {
                index: k,
                reason: format!("height {w:e} beyond focal bound {bound:e}"),
            });
        }
        heights.push(w);
        feet.push((s.rem_euclid(tg.period_u()), t.rem_euclid(tg.period_v())));
        residual = residual.max(r);
    }
    Ok(NormalGraph { height: ScalarField::new(bg, heights)?, foot_points: feet, residual })
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

/// Returns `(s, t, w, residual)` on convergence.
fn newton_foot(interp: &Interpolant, p: [f64; 3], nu: [f64; 3], start: (f64, f64)) -> Option<(f64, f64, f64, f64)> {
    let (mut s, mut t) = start;
    let sample = interp.sample(s, t);
    let mut w: f64 = (0..3).map(|i| (sample.value[i] - p[i]) * nu[i]).sum();
    let mut prev = f64::INFINITY;
    for _ in 0..GRAPH_MAX_ITERATIONS {
        let q = interp.sample(s, t);
        let f = Vector3::from_fn(|i, _| q.value[i] - p[i] - w * nu[i]);
        let r = f.norm();
        if !r.is_finite() {
            return None;
        }
        // converged once the residual stops shrinking at roundoff level
        if r < 1e-14 || (r < 1e-11 && r >= 0.5 * prev) {
            return Some((s, t, w, r));
        }
        prev = r;
        let jac = Matrix3::from_fn(|i, j| match j {
            0 => q.d_u[i],
            1 => q.d_v[i],
            _ => -nu[i],
        });
        let step = jac.lu().solve(&f)?;
        s -= step[0];
        t -= step[1];
        w -= step[2];
    }
    None
}

/// `sup |v|`.
pub fn c0_norm(v: &ScalarField) -> f64 {
    v.max_abs()
}

/// `sup |v| + sup |∇v| + sup |∇²v|` with parameter derivatives.
pub fn c2_norm(v: &ScalarField) -> f64 {
    let sp = Spectral2d::for_grid(v.grid());
    let hat = sp.forward(v.values());
    let d = |a, b| sp.derivative(&hat, a, b);
    let (du, dv, duu, duv, dvv) = (d(1, 0), d(0, 1), d(2, 0), d(1, 1), d(0, 2));
    let grad = (0..du.len()).map(|k| du[k].hypot(dv[k])).fold(0.0, f64::max);
    let hess = (0..du.len())
        .map(|k| (duu[k] * duu[k] + 2.0 * duv[k] * duv[k] + dvv[k] * dvv[k]).sqrt())
        .fold(0.0, f64::max);
    v.max_abs() + grad + hess
}

/// Discrete Sobolev norm on the parameter grid, weight `(1 + |k|²)²` per mode.
pub fn h2_norm(v: &ScalarField) -> f64 {
    let g = v.grid();
    let sp = Spectral2d::for_grid(g);
    let hat = sp.forward(v.values());
    let mut acc = 0.0;
    for (p, &m) in sp.mode_u().iter().enumerate() {
        let ku = std::f64::consts::TAU * m as f64 / g.period_u();
        for (q, &n) in sp.mode_v().iter().enumerate() {
            let kv = std::f64::consts::TAU * n as f64 / g.period_v();
            acc += (1.0 + ku * ku + kv * kv).powi(2) * hat[p * g.n_v() + q].norm_sqr();
        }
    }
    (acc * g.cell_area() / g.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphNorms {
    pub c0: f64,
    pub c2: f64,
    pub h2: f64,
}

impl GraphNorms {
    pub fn of(v: &ScalarField) -> Self {
        Self { c0: c0_norm(v), c2: c2_norm(v), h2: h2_norm(v) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposeConfig {
    /// Stop once the kernel part of the graph has Sobolev norm below this.
    pub tol: f64,
    /// Largest admissible `C²` norm of the initial graph over `T_Cl`.
    pub delta: f64,
    pub max_iterations: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self { tol: 1e-10, delta: 1.5, max_iterations: 30 }
    }
}

/// `Σ = exp_normal(Φ(T_Cl), v)` with `Φ` generated by the kernel element `u`
/// and `v` free of kernel components.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub coefficients: [f64; KERNEL_DIM],
    pub map: MobiusMap,
    pub v: ScalarField,
    /// Sobolev norm of the kernel part of `v`.
    pub residual: f64,
    pub iterations: usize,
    /// Kernel residual before each update, starting with the initial graph.
    pub residual_history: Vec<f64>,
    /// Newton residual of the final graph.
    pub reconstruction_error: f64,
    pub norms: GraphNorms,
    /// `C²` norm of the graph over `T_Cl` itself.
    pub initial_c2: f64,
}

pub fn decompose(sigma: &Immersion, config: &DecomposeConfig) -> Result<Decomposition> {
    decompose_from(sigma, config, [0.0; KERNEL_DIM])
}

/// Fixed-point iteration `u ← u + P_K(graph over Φ_u(T_Cl))`, starting at `u0`.
pub fn decompose_from(sigma: &Immersion, config: &DecomposeConfig, u0: [f64; KERNEL_DIM]) -> Result<Decomposition> {
    if !(config.tol > 0.0 && config.delta > 0.0) {
        return Err(Error::InvalidParameter("decompose tolerances must be positive".into()));
    }
    let grid = torus_grid_like(sigma.grid())?;
    let frame = KernelFrame::for_grid(&grid)?;
    let initial = graph_over_with(frame.base(), frame.geometry(), sigma)?;
    let initial_c2 = c2_norm(&initial.height);
    if initial_c2 > config.delta {
        return Err(Error::NotInNeighborhood {
            index: 0,
            reason: format!("graph over the Clifford torus has C² norm {initial_c2:e} > {:e}", config.delta),
        });
    }
    let mut u = u0;
    let mut graph = if u0.iter().all(|&x| x == 0.0) { initial } else { graph_at(&frame, &u, sigma)?.1 };
    let mut history = Vec::new();
    for it in 0..=config.max_iterations {
        let c = frame.coefficients(&graph.height)?;
        let res = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        history.push(res);
        if res <= config.tol {
            let map = mobius_from_kernel(&frame, &u, 1.0);
            return Ok(Decomposition {
                coefficients: u,
                map,
                norms: GraphNorms::of(&graph.height),
                v: graph.height,
                residual: res,
                iterations: it,
                residual_history: history,
                reconstruction_error: graph.residual,
                initial_c2,
            });
        }
        if it == config.max_iterations {
            return Err(Error::NoConvergence { iterations: it, residual: res });
        }
        for (ui, ci) in u.iter_mut().zip(c) {
            *ui += ci;
        }
        graph = graph_at(&frame, &u, sigma)?.1;
    }
    unreachable!("loop returns")
}

fn graph_at(frame: &KernelFrame, u: &[f64; KERNEL_DIM], sigma: &Immersion) -> Result<(Immersion, NormalGraph)> {
    let base = mobius_from_kernel(frame, u, 1.0).apply_immersion(frame.base())?;
    let graph = graph_over(&base, sigma)?;
    Ok((base, graph))
}

/// The gauge surface `Φ_u(T_Cl)` of a decomposition.
pub fn gauge_surface(d: &Decomposition) -> Result<Immersion> {
    let frame = KernelFrame::for_grid(&torus_grid_like(d.v.grid())?)?;
    d.map.apply_immersion(frame.base())
}

/// Rebuilds the decomposed surface on the uniform grid of the gauge surface.
pub fn reconstruct(d: &Decomposition) -> Result<Immersion> {
    exp_normal(&gauge_surface(d)?, &d.v)
}

/// Largest normal distance from the reconstructed surface to `sigma`,
/// measured by a fresh normal-line solve.
pub fn reconstruction_gap(d: &Decomposition, sigma: &Immersion) -> Result<f64> {
    Ok(graph_over(&reconstruct(d)?, sigma)?.height.max_abs())
}

/// Seeded test surface `Φ(exp_normal(T_Cl, v))` with `v ∈ K⊥` of `C²` norm
/// `amplitude` and `Φ = random_mobius(seed, epsilon)`.
#[derive(Debug, Clone)]
pub struct GaugedSample {
    pub sigma: Immersion,
    pub v: ScalarField,
    pub map: MobiusMap,
}

pub fn gauged_sample(grid: ParamGrid, seed: u64, epsilon: f64, amplitude: f64) -> Result<GaugedSample> {
    let frame = KernelFrame::for_grid(&grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f6a);
    let modes: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(0..=3) as f64,
                rng.random_range(-3..=3) as f64,
                rng.random_range(-1.0..1.0),
                rng.random_range(0.0..TAU),
            )
        })
        .collect();
    let raw = ScalarField::from_fn(grid, |u, v| {
        modes.iter().map(|&(m, n, a, phase)| a * (m * u + n * v + phase).cos()).sum()
    });
    let v = frame.project_kperp(&raw)?;
    let v = v.scale(amplitude / c2_norm(&v));
    let map = random_mobius(seed, epsilon)?;
    let sigma = map.apply_immersion(&exp_normal(frame.base(), &v)?)?;
    Ok(GaugedSample { sigma, v, map })
}

fn torus_grid_like(g: &ParamGrid) -> Result<ParamGrid> {
    ParamGrid::new(g.n_u(), g.n_v(), std::f64::consts::TAU, std::f64::consts::TAU)
}
