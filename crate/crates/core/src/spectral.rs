//! FFT machinery on periodic grids: spectral derivatives, Fourier-diagonal
//! operators and trigonometric interpolation.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::rc::Rc;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::ParamGrid;

type PlanKey = (usize, usize, u64, u64);

thread_local! {
    static PLANS: RefCell<BTreeMap<PlanKey, Rc<Spectral2d>>> = const { RefCell::new(BTreeMap::new()) };
}

pub(crate) struct Spectral2d {
    n_u: usize,
    n_v: usize,
    /// Signed integer mode numbers in FFT order; the Nyquist mode is `+n/2`.
    mode_u: Vec<i64>,
    mode_v: Vec<i64>,
    k_u: Vec<f64>,
    k_v: Vec<f64>,
    fwd_u: Arc<dyn Fft<f64>>,
    inv_u: Arc<dyn Fft<f64>>,
    fwd_v: Arc<dyn Fft<f64>>,
    inv_v: Arc<dyn Fft<f64>>,
}

fn modes(n: usize) -> Vec<i64> {
    (0..n).map(|i| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 }).collect()
}

impl Spectral2d {
    /// Cached per thread; plans are keyed by grid shape and periods.
    pub fn for_grid(grid: &ParamGrid) -> Rc<Self> {
        let key = (grid.n_u(), grid.n_v(), grid.period_u().to_bits(), grid.period_v().to_bits());
        PLANS.with(|plans| {
            plans.borrow_mut().entry(key).or_insert_with(|| Rc::new(Self::new(grid))).clone()
        })
    }

    fn new(grid: &ParamGrid) -> Self {
        let (n_u, n_v) = (grid.n_u(), grid.n_v());
        let mut planner = FftPlanner::new();
        let mode_u = modes(n_u);
        let mode_v = modes(n_v);
        let k_u = mode_u.iter().map(|&m| TAU * m as f64 / grid.period_u()).collect();
        let k_v = mode_v.iter().map(|&m| TAU * m as f64 / grid.period_v()).collect();
        Self {
            n_u,
            n_v,
            mode_u,
            mode_v,
            k_u,
            k_v,
            fwd_u: planner.plan_fft_forward(n_u),
            inv_u: planner.plan_fft_inverse(n_u),
            fwd_v: planner.plan_fft_forward(n_v),
            inv_v: planner.plan_fft_inverse(n_v),
        }
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_v
    }

    pub fn mode_u(&self) -> &[i64] {
        &self.mode_u
    }

    pub fn mode_v(&self) -> &[i64] {
        &self.mode_v
    }

    fn transpose(&self, src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
        for r in 0..rows {
            for c in 0..cols {
                out[c * rows + r] = src[r * cols + c];
            }
        }
        out
    }

    fn fft2(&self, mut buf: Vec<Complex64>, along_v: &dyn Fft<f64>, along_u: &dyn Fft<f64>) -> Vec<Complex64> {
        along_v.process(&mut buf);
        let mut t = self.transpose(&buf, self.n_u, self.n_v);
        along_u.process(&mut t);
        self.transpose(&t, self.n_v, self.n_u)
    }

    /// Unnormalized forward transform of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len());
        let buf = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft2(buf, self.fwd_v.as_ref(), self.fwd_u.as_ref())
    }

    /// Inverse of [`forward`](Self::forward), keeping the real part.
    pub fn inverse(&self, hat: Vec<Complex64>) -> Vec<f64> {
        let scale = 1.0 / self.len() as f64;
        self.fft2(hat, self.inv_v.as_ref(), self.inv_u.as_ref())
            .into_iter()
            .map(|c| c.re * scale)
            .collect()
    }

    /// `∂_u^a ∂_v^b` of the field with transform `hat`. Odd derivatives drop
    /// the Nyquist mode so that derivatives of real data stay real.
    pub fn derivative(&self, hat: &[Complex64], a: u32, b: u32) -> Vec<f64> {
        let i = Complex64::new(0.0, 1.0);
        let mut out = Vec::with_capacity(hat.len());
        for (p, (&ku, &mu)) in self.k_u.iter().zip(&self.mode_u).enumerate() {
            let fu = if a % 2 == 1 && mu * 2 == self.n_u as i64 {
                Complex64::new(0.0, 0.0)
            } else {
                (i * ku).powu(a)
            };
            for (q, (&kv, &mv)) in self.k_v.iter().zip(&self.mode_v).enumerate() {
                let fv = if b % 2 == 1 && mv * 2 == self.n_v as i64 {
                    Complex64::new(0.0, 0.0)
                } else {
                    (i * kv).powu(b)
                };
                out.push(hat[p * self.n_v + q] * fu * fv);
            }
        }
        self.inverse(out)
    }

    /// Applies the Fourier multiplier `symbol(m, n)` (integer mode numbers).
    pub fn apply_symbol(&self, values: &[f64], symbol: impl Fn(i64, i64) -> f64) -> Vec<f64> {
        let mut hat = self.forward(values);
        for (p, &m) in self.mode_u.iter().enumerate() {
            for (q, &n) in self.mode_v.iter().enumerate() {
                hat[p * self.n_v + q] *= symbol(m, n);
            }
        }
        self.inverse(hat)
    }
}

/// Trigonometric interpolant of sampled components, evaluable off-grid with
/// first parameter derivatives.
pub(crate) struct Interpolant {
    n_u: usize,
    n_v: usize,
    k_u: Vec<f64>,
    k_v: Vec<f64>,
    coeffs: Vec<Vec<Complex64>>,
}

/// Value and first parameter derivatives of every component at one point.
pub(crate) struct Sample {
    pub value: Vec<f64>,
    pub d_u: Vec<f64>,
    pub d_v: Vec<f64>,
}

impl Interpolant {
    pub fn new(grid: &ParamGrid, components: &[Vec<f64>]) -> Self {
        let sp = Spectral2d::for_grid(grid);
        let scale = 1.0 / sp.len() as f64;
        let coeffs = components
            .iter()
            .map(|c| sp.forward(c).into_iter().map(|z| z * scale).collect())
            .collect();
        Self { n_u: sp.n_u, n_v: sp.n_v, k_u: sp.k_u.clone(), k_v: sp.k_v.clone(), coeffs }
    }

    fn basis(k: &[f64], n: usize, x: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut e = Vec::with_capacity(n);
        let mut de = Vec::with_capacity(n);
        for (idx, &kk) in k.iter().enumerate() {
            if idx * 2 == n {
                // symmetric treatment of the Nyquist mode keeps the interpolant real
                e.push(Complex64::new((kk * x).cos(), 0.0));
                de.push(Complex64::new(-kk * (kk * x).sin(), 0.0));
            } else {
                let z = Complex64::from_polar(1.0, kk * x);
                e.push(z);
                de.push(z * Complex64::new(0.0, kk));
            }
        }
        (e, de)
    }

    pub fn sample(&self, s: f64, t: f64) -> Sample {
        let (eu, deu) = Self::basis(&self.k_u, self.n_u, s);
        let (ev, dev) = Self::basis(&self.k_v, self.n_v, t);
        let mut out = Sample {
            value: Vec::with_capacity(self.coeffs.len()),
            d_u: Vec::with_capacity(self.coeffs.len()),
            d_v: Vec::with_capacity(self.coeffs.len()),
        };
        for c in &self.coeffs {
            let (mut val, mut du, mut dv) = (0.0, 0.0, 0.0);
            for p in 0..self.n_u {
                let row = &c[p * self.n_v..(p + 1) * self.n_v];
                let mut r = Complex64::new(0.0, 0.0);
                let mut rd = Complex64::new(0.0, 0.0);
                for q in 0..self.n_v {
                    r += row[q] * ev[q];
                    rd += row[q] * dev[q];
                }
                val += (eu[p] * r).re;
                du += (deu[p] * r).re;
                dv += (eu[p] * rd).re;
            }
            out.value.push(val);
            out.d_u.push(du);
            out.d_v.push(dv);
        }
        out
    }
}
