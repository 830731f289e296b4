//! Willmore gradient flow of R³ tori near the Clifford torus, and the energy
//! scan along normal graphs of the S³ Clifford torus.
//!
//! The surface moves with normal speed `-G`, where `G` is the L² gradient of
//! the energy (see [`crate::energy::l2_gradient`]). Every accepted step is
//! energy non-increasing up to a relative slack of `1e-12`; rejected steps halve
//! the time step.

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::clifford::{coercivity_lambda, SpectralModel, KERNEL_DIM};
use crate::energy::{energy_from_geometry, l2_gradient, l2_norm, willmore_energy};
use crate::error::{Error, Result};
use crate::gauge::{mobius_from_generators, KernelFrame, GENERATOR_COUNT};
use crate::geometry::{geometry, GeometryCache};
use crate::graph::{c2_norm, decompose_from, exp_normal, gauge_surface, DecomposeConfig, GraphNorms};
use crate::grid::{ParamGrid, ScalarField};
use crate::immersion::{clifford_torus_s3, Immersion};
use crate::mobius::Primitive;
use crate::spectral::Spectral2d;

/// Relative energy increase tolerated on an accepted step.
pub const ENERGY_SLACK: f64 = 1e-12;

/// Explicit-step stability constant in `dt ≤ c h⁴`.
pub const RK2_STABILITY: f64 = 0.02;

/// Consecutive acceptances before the step grows.
pub const GROWTH_STREAK: usize = 5;

pub const TWO_PI_SQUARED: f64 = 2.0 * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Heun's method, limited by `dt ≤ c h⁴`.
    Rk2,
    /// Linearly stabilized Euler step: the fourth-order part of the
    /// linearized gradient is treated implicitly in Fourier space.
    Stabilized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// The step is divided by this after [`GROWTH_STREAK`] acceptances.
    pub safety: f64,
    pub grad_tol: f64,
    /// Energy plateau threshold over `plateau_window` accepted steps.
    pub energy_tol: f64,
    pub plateau_window: usize,
    pub max_steps: usize,
    pub regraph_every: usize,
    pub gauge_fixing: bool,
    pub scheme: Scheme,
    pub decompose: DecomposeConfig,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 0.05,
            safety: 0.8,
            grad_tol: 5e-3,
            energy_tol: 1e-10,
            plateau_window: 50,
            max_steps: 5000,
            regraph_every: 25,
            gauge_fixing: true,
            scheme: Scheme::Stabilized,
            decompose: DecomposeConfig::default(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad("need 0 < dt_min <= dt_init <= dt_max");
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety factor must lie in (0, 1)");
        }
        if !(self.grad_tol > 0.0 && self.energy_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.regraph_every == 0 || self.plateau_window == 0 {
            return bad("regraph_every and plateau_window must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub time: f64,
    pub immersion: Immersion,
    pub dt: f64,
    pub energy: f64,
    pub grad_norm: f64,
    /// Accepted steps so far.
    pub step: usize,
    pub streak: usize,
    pub rejections: usize,
    /// Kernel coefficients of the current Möbius gauge, when known.
    pub gauge: [f64; KERNEL_DIM],
}

impl FlowState {
    pub fn new(immersion: Immersion, dt: f64) -> Result<Self> {
        let geo = geometry(&immersion)?;
        let grad_norm = l2_norm(&geo, &l2_gradient(&geo)?)?;
        Ok(Self {
            time: 0.0,
            energy: energy_from_geometry(&geo),
            immersion,
            dt,
            grad_norm,
            step: 0,
            streak: 0,
            rejections: 0,
            gauge: [0.0; KERNEL_DIM],
        })
    }
}

/// Smallest ambient distance between neighboring grid points.
pub fn min_spacing(geo: &GeometryCache) -> f64 {
    let g = geo.grid();
    geo.metric
        .iter()
        .map(|m| (m[0].sqrt() * g.du()).min(m[2].sqrt() * g.dv()))
        .fold(f64::INFINITY, f64::min)
}

pub fn stability_bound(geo: &GeometryCache) -> f64 {
    RK2_STABILITY * min_spacing(geo).powi(4)
}

fn displace(im: &Immersion, geo: &GeometryCache, speed: &ScalarField, dt: f64) -> Result<Immersion> {
    let coords = im
        .coords()
        .iter()
        .zip(geo.normal())
        .map(|(f, nu)| f.iter().zip(nu).zip(speed.values()).map(|((x, n), s)| x + dt * s * n).collect())
        .collect();
    Immersion::new(*im.grid(), im.ambient(), coords)
}

fn propose_rk2(im: &Immersion, geo: &GeometryCache, grad: &ScalarField, dt: f64) -> Result<Immersion> {
    let k1 = grad.scale(-1.0);
    let mid = displace(im, geo, &k1, dt)?;
    let mid_geo = geometry(&mid)?;
    let k2 = l2_gradient(&mid_geo)?.scale(-1.0);
    let coords = im
        .coords()
        .iter()
        .enumerate()
        .map(|(c, f)| {
            (0..f.len())
                .map(|k| {
                    f[k] + 0.5 * dt * (k1.values()[k] * geo.normal()[c][k] + k2.values()[k] * mid_geo.normal()[c][k])
                })
                .collect()
        })
        .collect();
    Immersion::new(*im.grid(), im.ambient(), coords)
}

/// Solves `(I + dt S) δ = -dt G` with `S` the Fourier symbol
/// `½ (c_u k_u² + c_v k_v²)²`, `c` the largest inverse-metric diagonal entries.
fn propose_stabilized(im: &Immersion, geo: &GeometryCache, grad: &ScalarField, dt: f64) -> Result<Immersion> {
    let g = im.grid();
    let cu = geo.inverse_metric.iter().map(|m| m[0]).fold(0.0, f64::max);
    let cv = geo.inverse_metric.iter().map(|m| m[2]).fold(0.0, f64::max);
    let (su, sv) = (TAU / g.period_u(), TAU / g.period_v());
    let sp = Spectral2d::for_grid(g);
    let step = sp.apply_symbol(grad.values(), |m, n| {
        let (ku, kv) = (su * m as f64, sv * n as f64);
        let s = 0.5 * (cu * ku * ku + cv * kv * kv).powi(2);
        -dt / (1.0 + dt * s)
    });
    displace(im, geo, &ScalarField::new(*g, step)?, 1.0)
}

/// One accepted step, with as many halvings of `dt` as needed.
pub fn flow_step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    let geo = geometry(&state.immersion)?;
    let grad = l2_gradient(&geo)?;
    let cap = match config.scheme {
        Scheme::Rk2 => config.dt_max.min(stability_bound(&geo)),
        Scheme::Stabilized => config.dt_max,
    };
    let mut dt = state.dt;
    let mut rejections = state.rejections;
    loop {
        if dt < config.dt_min {
            return Err(Error::StepCollapse { dt, dt_min: config.dt_min });
        }
        let proposal = match config.scheme {
            Scheme::Rk2 => propose_rk2(&state.immersion, &geo, &grad, dt),
            Scheme::Stabilized => propose_stabilized(&state.immersion, &geo, &grad, dt),
        };
        // a degenerate proposal counts as a rejection
        let evaluated = proposal.and_then(|im| {
            let g = geometry(&im)?;
            let e = energy_from_geometry(&g);
            Ok((im, g, e))
        });
        if let Ok((im, new_geo, energy)) = evaluated {
            if energy.is_finite() && energy <= state.energy * (1.0 + ENERGY_SLACK) {
                let streak = state.streak + 1;
                let (next_dt, streak) =
                    if streak >= GROWTH_STREAK { ((dt / config.safety).min(cap), 0) } else { (dt.min(cap), streak) };
                let grad_norm = l2_norm(&new_geo, &l2_gradient(&new_geo)?)?;
                return Ok(FlowState {
                    time: state.time + dt,
                    immersion: im,
                    dt: next_dt,
                    energy,
                    grad_norm,
                    step: state.step + 1,
                    streak,
                    rejections,
                    gauge: state.gauge,
                });
            }
        }
        rejections += 1;
        dt *= 0.5;
    }
}

/// Replaces the immersion by the normal graph over its Möbius gauge surface,
/// resampled on the uniform grid. With gauge fixing, the translation and
/// dilation parts of the gauge are divided out.
pub fn regraph(state: &FlowState, config: &FlowConfig) -> Result<(FlowState, f64)> {
    let d = decompose_from(&state.immersion, &config.decompose, state.gauge)?;
    let mut im = exp_normal(&gauge_surface(&d)?, &d.v)?;
    let mut gauge = d.coefficients;
    if config.gauge_fixing {
        let frame = KernelFrame::for_grid(im.grid())?;
        let mut beta = frame.generator_weights(&gauge);
        let shift = [beta[0], beta[1], beta[2]];
        let scale = beta[6].exp();
        let undo = mobius_from_generators(&[0.0; GENERATOR_COUNT])
            .then(Primitive::Translation(shift.map(|x| -x)))
            .then(Primitive::Dilation(1.0 / scale));
        im = undo.apply_immersion(&im)?;
        for j in [0, 1, 2, 6] {
            beta[j] = 0.0;
        }
        gauge = frame.coefficients_of_generators(&beta);
    }
    let geo = geometry(&im)?;
    let next = FlowState {
        energy: energy_from_geometry(&geo),
        grad_norm: l2_norm(&geo, &l2_gradient(&geo)?)?,
        immersion: im,
        gauge,
        ..state.clone()
    };
    Ok((next, d.residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub grad_norm: f64,
    pub dt: f64,
    /// Kernel residual of the decomposition, on regraph steps.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub records: Vec<TraceRecord>,
}

impl FlowTrace {
    fn push(&mut self, s: &FlowState, residual: Option<f64>) {
        self.records.push(TraceRecord {
            step: s.step,
            time: s.time,
            energy: s.energy,
            grad_norm: s.grad_norm,
            dt: s.dt,
            residual,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    EnergyPlateau,
    /// Step budget exhausted; never reported as converged.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub converged: bool,
    pub termination: Termination,
    pub energy: f64,
    pub energy_excess: f64,
    pub grad_norm: f64,
    pub steps: usize,
    pub rejections: usize,
    pub time: f64,
    pub coefficients: [f64; KERNEL_DIM],
    pub v_norms: GraphNorms,
    pub kernel_residual: f64,
    /// Largest energy increase over one accepted step, relative to the energy.
    pub max_step_increase: f64,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub trace: FlowTrace,
    pub state: FlowState,
    pub certificate: Certificate,
}

pub fn run_flow(f0: &Immersion, config: &FlowConfig) -> Result<FlowRun> {
    run_flow_observed(f0, config, |_| Ok(()))
}

/// [`run_flow`], calling `observe` on the initial state and after every accepted step.
pub fn run_flow_observed(
    f0: &Immersion,
    config: &FlowConfig,
    mut observe: impl FnMut(&FlowState) -> Result<()>,
) -> Result<FlowRun> {
    config.validate()?;
    let mut state = FlowState::new(f0.clone(), config.dt_init)?;
    let mut trace = FlowTrace::default();
    trace.push(&state, None);
    observe(&state)?;
    let mut max_increase = f64::NEG_INFINITY;
    let termination = loop {
        if state.grad_norm <= config.grad_tol {
            break Termination::GradientTolerance;
        }
        let w = config.plateau_window;
        if state.step >= w {
            let recent: Vec<&TraceRecord> = trace.records.iter().rev().take(w + 1).collect();
            if recent.len() == w + 1 && (recent[w].energy - recent[0].energy).abs() <= config.energy_tol {
                break Termination::EnergyPlateau;
            }
        }
        if state.step >= config.max_steps {
            break Termination::Inconclusive;
        }
        let next = flow_step(&state, config)?;
        max_increase = max_increase.max((next.energy - state.energy) / state.energy);
        state = next;
        if state.step % config.regraph_every == 0 {
            let (s, residual) = regraph(&state, config)?;
            state = s;
            trace.push(&state, Some(residual));
        } else {
            trace.push(&state, None);
        }
        observe(&state)?;
    };
    let d = decompose_from(&state.immersion, &config.decompose, state.gauge)?;
    let certificate = Certificate {
        converged: termination != Termination::Inconclusive,
        termination,
        energy: state.energy,
        energy_excess: state.energy - TWO_PI_SQUARED,
        grad_norm: state.grad_norm,
        steps: state.step,
        rejections: state.rejections,
        time: state.time,
        coefficients: d.coefficients,
        v_norms: d.norms,
        kernel_residual: d.residual,
        max_step_increase: if state.step == 0 { 0.0 } else { max_increase },
    };
    Ok(FlowRun { trace, state, certificate })
}

/// One row of the energy scan along `exp(t v̂)` over the S³ Clifford torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub direction: usize,
    pub t: f64,
    pub excess: f64,
    /// `½ t² W''(v̂, v̂)`
    pub quadratic: f64,
    /// `|excess - quadratic|`
    pub remainder: f64,
    /// `(λ/4) t² ‖v̂‖²`
    pub lower_bound: f64,
}

/// Fourier modes `(m, n)` of the scan directions (`μ = 0, 8, 10, 16, 18`).
pub const GAP_MODES: [(i64, i64); 5] = [(0, 0), (2, 0), (1, 2), (2, 2), (3, 0)];

/// Single Fourier modes outside the kernel, scaled to unit `C²` norm on the chart.
pub fn gap_directions(model: &SpectralModel) -> Vec<ScalarField> {
    GAP_MODES
        .iter()
        .map(|&(m, n)| {
            let (m, n) = (m as f64, n as f64);
            let f = ScalarField::from_fn(*model.grid(), |x, y| (SQRT_2 * (m * x + n * y)).cos());
            f.scale(1.0 / c2_norm(&f))
        })
        .collect()
}

pub fn gap_scan(model: &SpectralModel, directions: &[ScalarField], amplitudes: &[f64]) -> Result<Vec<GapRow>> {
    let base = clifford_torus_s3(*model.grid())?;
    let lambda = coercivity_lambda(8)?;
    let mut rows = Vec::with_capacity(directions.len() * amplitudes.len());
    for (id, v) in directions.iter().enumerate() {
        let form = model.w2_form(v, v)?;
        let h2 = model.h2_norm(v)?;
        for &t in amplitudes {
            let excess = willmore_energy(&exp_normal(&base, &v.scale(t))?)? - TWO_PI_SQUARED;
            let quadratic = 0.5 * t * t * form;
            rows.push(GapRow {
                direction: id,
                t,
                excess,
                quadratic,
                remainder: (excess - quadratic).abs(),
                lower_bound: 0.25 * lambda * t * t * h2 * h2,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// Grid quality `min det g / max det g`.
pub fn grid_quality(geo: &GeometryCache) -> f64 {
    let dets = geo.area_element.iter().map(|a| a * a);
    let (lo, hi) = dets.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    lo / hi
}

/// Standard perturbation direction: a smooth field on the `(2π, 2π)` grid,
/// free of kernel components and of unit `C²` norm. Directions repeat mod 3.
pub fn perturbation_direction(grid: ParamGrid, direction: usize) -> Result<ScalarField> {
    let frame = KernelFrame::for_grid(&grid)?;
    let raw = match direction % 3 {
        0 => ScalarField::from_fn(grid, |u, v| (2.0 * u).cos() * v.sin() + 0.4 * (u + 2.0 * v).sin()),
        1 => ScalarField::from_fn(grid, |u, v| 0.5 + (3.0 * u).sin() * (2.0 * v).cos()),
        _ => ScalarField::from_fn(grid, |u, v| (2.0 * v).cos() + 0.5 * (u - v).cos() * u.sin()),
    };
    let v = frame.project_kperp(&raw)?;
    Ok(v.scale(1.0 / c2_norm(&v)))
}

/// Standard perturbed start `exp_normal(T_Cl, amplitude · v̂)`.
pub fn perturbed_clifford(grid: ParamGrid, direction: usize, amplitude: f64) -> Result<Immersion> {
    let frame = KernelFrame::for_grid(&grid)?;
    exp_normal(frame.base(), &perturbation_direction(grid, direction)?.scale(amplitude))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::{clifford_torus, revolution_torus};

    fn grid(n: usize) -> ParamGrid {
        ParamGrid::torus(n).unwrap()
    }

    #[test]
    fn clifford_torus_does_not_move() {
        let t = clifford_torus(grid(32)).unwrap();
        let cfg = FlowConfig::default();
        let s = flow_step(&FlowState::new(t.clone(), 1e-3).unwrap(), &cfg).unwrap();
        assert!(s.immersion.max_distance(&t).unwrap() < 1e-5);
        let t64 = clifford_torus(grid(64)).unwrap();
        let s = flow_step(&FlowState::new(t64.clone(), 1e-3).unwrap(), &cfg).unwrap();
        assert!(s.immersion.max_distance(&t64).unwrap() < 1e-8);
    }

    #[test]
    fn one_step_decreases_energy() {
        let f = revolution_torus(1.6, 1.0, grid(32)).unwrap();
        for scheme in [Scheme::Rk2, Scheme::Stabilized] {
            let cfg = FlowConfig { scheme, ..FlowConfig::default() };
            let s0 = FlowState::new(f.clone(), 1e-4).unwrap();
            let s1 = flow_step(&s0, &cfg).unwrap();
            assert!(s1.energy < s0.energy, "{scheme:?}");
        }
    }

    #[test]
    fn oversized_explicit_step_is_rejected() {
        let g = grid(32);
        let base = revolution_torus(1.6, 1.0, g).unwrap();
        let ripple = ScalarField::from_fn(g, |u, v| 1e-3 * (12.0 * u).cos() * (10.0 * v).cos());
        let f = exp_normal(&base, &ripple).unwrap();
        let geo = geometry(&f).unwrap();
        let bound = stability_bound(&geo);
        let cfg = FlowConfig { scheme: Scheme::Rk2, dt_max: 1.0, ..FlowConfig::default() };
        let s0 = FlowState::new(f, 1e3 * bound).unwrap();
        let s1 = flow_step(&s0, &cfg).unwrap();
        assert!(s1.rejections > 0);
        assert!(s1.energy <= s0.energy * (1.0 + ENERGY_SLACK));
        assert!(s1.dt <= bound);
    }

    #[test]
    fn step_collapse_is_reported() {
        let f = revolution_torus(1.6, 1.0, grid(16)).unwrap();
        let cfg = FlowConfig { scheme: Scheme::Rk2, dt_min: 1.0, dt_init: 1.0, dt_max: 1e6, ..FlowConfig::default() };
        let err = flow_step(&FlowState::new(f, 1e6).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, Error::StepCollapse { .. }));
    }

    #[test]
    fn dissipation_matches_squared_gradient() {
        let f = perturbed_clifford(grid(32), 0, 0.05).unwrap();
        let cfg = FlowConfig { scheme: Scheme::Rk2, ..FlowConfig::default() };
        let geo = geometry(&f).unwrap();
        let dt = 0.5 * stability_bound(&geo);
        let s0 = FlowState::new(f, dt).unwrap();
        let s1 = flow_step(&s0, &cfg).unwrap();
        let rate = (s0.energy - s1.energy) / (s1.time - s0.time);
        let expected = s0.grad_norm.powi(2);
        assert!((rate / expected - 1.0).abs() < 0.1, "{rate} vs {expected}");
    }

    #[test]
    fn regraph_is_trivial_at_clifford_and_idempotent() {
        let cfg = FlowConfig::default();
        let t = clifford_torus(grid(32)).unwrap();
        let (s, _) = regraph(&FlowState::new(t.clone(), 1e-3).unwrap(), &cfg).unwrap();
        assert!(s.immersion.max_distance(&t).unwrap() < 1e-12);

        let f = perturbed_clifford(grid(32), 1, 0.05).unwrap();
        let (once, _) = regraph(&FlowState::new(f, 1e-3).unwrap(), &cfg).unwrap();
        let (twice, _) = regraph(&once, &cfg).unwrap();
        assert!(twice.immersion.max_distance(&once.immersion).unwrap() <= 1e-10);
    }

    #[test]
    fn regraph_keeps_grid_quality() {
        let cfg = FlowConfig { regraph_every: usize::MAX, ..FlowConfig::default() };
        let f = perturbed_clifford(grid(32), 2, 0.05).unwrap();
        let mut s = FlowState::new(f, 1e-3).unwrap();
        for _ in 0..100 {
            s = flow_step(&s, &cfg).unwrap();
        }
        let before = grid_quality(&geometry(&s.immersion).unwrap());
        let (r, _) = regraph(&s, &cfg).unwrap();
        let after = grid_quality(&geometry(&r.immersion).unwrap());
        assert!(after >= 0.99 * before, "{before} -> {after}");
        assert!((r.energy - s.energy).abs() < 1e-8 * s.energy);
    }

    #[test]
    fn run_from_clifford_stops_immediately() {
        let run = run_flow(&clifford_torus(grid(32)).unwrap(), &FlowConfig::default()).unwrap();
        assert_eq!(run.certificate.steps, 0);
        assert_eq!(run.certificate.termination, Termination::GradientTolerance);
        assert!(run.certificate.v_norms.c0 < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let f = perturbed_clifford(grid(32), 0, 0.05).unwrap();
        let cfg = FlowConfig { max_steps: 3, ..FlowConfig::default() };
        let run = run_flow(&f, &cfg).unwrap();
        assert_eq!(run.certificate.termination, Termination::Inconclusive);
        assert!(!run.certificate.converged);
    }

    #[test]
    fn gap_scan_energy_excess_is_a_quarter_of_the_form() {
        // The energy Hessian is half of the bilinear form, so the excess is
        // close to half of `½ t² W''(v̂, v̂)`.
        let model = SpectralModel::new(32).unwrap();
        let dirs = gap_directions(&model);
        let rows = gap_scan(&model, &dirs, &[0.005]).unwrap();
        for r in &rows {
            let ratio = r.excess / r.quadratic;
            assert!((ratio - 0.5).abs() < 0.01, "direction {}: {ratio}", r.direction);
            assert!(r.excess >= r.lower_bound);
        }
    }

    #[test]
    fn constant_direction_matches_closed_form() {
        // parallel Clifford tori in S³: W = 2π² / cos 2t
        let model = SpectralModel::new(16).unwrap();
        let one = ScalarField::constant(*model.grid(), 1.0);
        for t in [0.02, 0.01] {
            let row = gap_scan(&model, std::slice::from_ref(&one), &[t]).unwrap()[0];
            let exact = TWO_PI_SQUARED / (2.0 * t).cos() - TWO_PI_SQUARED;
            assert!((row.excess - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn kernel_directions_are_flat() {
        let model = SpectralModel::new(32).unwrap();
        let k = model.kernel_basis()[4].scale(1.0 / c2_norm(&model.kernel_basis()[4]));
        let rows = gap_scan(&model, &[k], &[0.02, 0.01]).unwrap();
        let slope = loglog_slope(&[0.02, 0.01], &[rows[0].excess.abs(), rows[1].excess.abs()]);
        assert!(slope >= 2.9, "{slope}");
    }
}
