//! Möbius transformations of R³, conformal Killing fields and stereographic
//! projection between R³ and S³.
//!
//! A [`MobiusMap`] is an ordered list of primitives applied first to last.
//! Sphere inversions are kept explicit so that points too close to an
//! inversion center are reported instead of being mapped to huge values.
//!
//! Stereographic projection is taken from the pole `N = (0, 0, 0, 1)`:
//! `x = (y₁, y₂, y₃) / (1 - y₄)` with inverse `y = (2x, |x|² - 1) / (|x|² + 1)`.
//! The origin of R³ goes to the antipode `(0, 0, 0, -1)`, and the Clifford
//! torus of S³ goes exactly onto the revolution torus with radii `√2, 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryCache;
use crate::grid::ScalarField;
use crate::immersion::{Ambient, Immersion};

/// Default exclusion radius around inversion centers.
pub const INVERSION_EXCLUSION: f64 = 1e-3;

pub type Vec3 = [f64; 3];

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(s: f64, a: Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    Translation(Vec3),
    /// Right-handed rotation by `angle` about the unit `axis`.
    Rotation { axis: Vec3, angle: f64 },
    Dilation(f64),
    SphereInversion { center: Vec3, radius: f64 },
}

impl Primitive {
    fn apply(&self, p: Vec3, rho_min: f64) -> Result<Vec3> {
        Ok(match *self {
            Primitive::Translation(a) => add(p, a),
            Primitive::Rotation { axis, angle } => {
                // Rodrigues
                let (c, s) = (angle.cos(), angle.sin());
                let kxp = cross(axis, p);
                let kdp = dot(axis, p);
                [
                    p[0] * c + kxp[0] * s + axis[0] * kdp * (1.0 - c),
                    p[1] * c + kxp[1] * s + axis[1] * kdp * (1.0 - c),
                    p[2] * c + kxp[2] * s + axis[2] * kdp * (1.0 - c),
                ]
            }
            Primitive::Dilation(s) => scale(s, p),
            Primitive::SphereInversion { center, radius } => {
                let d = sub(p, center);
                let dist = norm(d);
                if dist < rho_min {
                    return Err(Error::InversionSingularity { distance: dist, min: rho_min });
                }
                add(center, scale(radius * radius / (dist * dist), d))
            }
        })
    }

    fn inverse(&self) -> Primitive {
        match *self {
            Primitive::Translation(a) => Primitive::Translation(scale(-1.0, a)),
            Primitive::Rotation { axis, angle } => Primitive::Rotation { axis, angle: -angle },
            Primitive::Dilation(s) => Primitive::Dilation(1.0 / s),
            inv @ Primitive::SphereInversion { .. } => inv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MobiusMap {
    primitives: Vec<Primitive>,
}

impl MobiusMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_primitives(primitives: Vec<Primitive>) -> Result<Self> {
        for p in &primitives {
            let ok = match *p {
                Primitive::Translation(a) => a.iter().all(|x| x.is_finite()),
                Primitive::Rotation { axis, angle } => angle.is_finite() && (norm(axis) - 1.0).abs() < 1e-12,
                Primitive::Dilation(s) => s.is_finite() && s > 0.0,
                Primitive::SphereInversion { center, radius } => {
                    center.iter().all(|x| x.is_finite()) && radius.is_finite() && radius > 0.0
                }
            };
            if !ok {
                return Err(Error::InvalidParameter(format!("invalid Möbius primitive {p:?}")));
            }
        }
        Ok(Self { primitives })
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn is_identity(&self) -> bool {
        self.primitives.is_empty()
    }

    /// `self` followed by `p`.
    pub fn then(mut self, p: Primitive) -> Self {
        self.primitives.push(p);
        self
    }

    /// The map `outer ∘ inner`.
    pub fn compose(outer: &MobiusMap, inner: &MobiusMap) -> MobiusMap {
        let mut primitives = inner.primitives.clone();
        primitives.extend_from_slice(&outer.primitives);
        MobiusMap { primitives }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap { primitives: self.primitives.iter().rev().map(Primitive::inverse).collect() }
    }

    /// Inversion centers met along the evaluation chain are checked against
    /// [`INVERSION_EXCLUSION`].
    pub fn apply(&self, p: Vec3) -> Result<Vec3> {
        self.apply_with(p, INVERSION_EXCLUSION)
    }

    pub fn apply_with(&self, p: Vec3, rho_min: f64) -> Result<Vec3> {
        self.primitives.iter().try_fold(p, |q, prim| prim.apply(q, rho_min))
    }

    pub fn apply_immersion(&self, im: &Immersion) -> Result<Immersion> {
        if im.ambient() != Ambient::R3 {
            return Err(Error::InvalidParameter("Möbius maps act on R³ immersions".into()));
        }
        let pts = (0..im.len()).map(|k| self.apply(im.point(k))).collect::<Result<Vec<_>>>()?;
        Immersion::from_points(*im.grid(), &pts)
    }

    /// Special conformal transformation `I ∘ T(c) ∘ I` with `I` the unit
    /// inversion about the origin. Its generator is `2 X_special(c)`.
    pub fn special_conformal(c: Vec3) -> MobiusMap {
        let inv = Primitive::SphereInversion { center: [0.0; 3], radius: 1.0 };
        MobiusMap { primitives: vec![inv, Primitive::Translation(c), inv] }
    }
}

/// Deterministic random Möbius map of size `epsilon ∈ [0, 0.5]`:
/// `Translation(εa) ∘ Rotation(axis, εθ) ∘ Dilation(e^{εs}) ∘ I_c ∘ T(εb) ∘ I_c`,
/// where `I_c` is an inversion centered at distance 4 from the origin (at
/// least 1.58 away from the Clifford torus).
pub fn random_mobius(seed: u64, epsilon: f64) -> Result<MobiusMap> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside [0, 0.5]")));
    }
    if epsilon == 0.0 {
        return Ok(MobiusMap::identity());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| loop {
        let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let n = norm(v);
        if n > 1e-3 && n <= 1.0 {
            return scale(1.0 / n, v);
        }
    };
    let a = scale(rng.random_range(0.0..1.0), unit(&mut rng));
    let axis = unit(&mut rng);
    let theta = rng.random_range(-1.0..1.0);
    let s = rng.random_range(-1.0..1.0);
    let center = scale(4.0, unit(&mut rng));
    let b = scale(rng.random_range(0.0..1.0), unit(&mut rng));
    let inv = Primitive::SphereInversion { center, radius: 4.0 };
    MobiusMap::from_primitives(vec![
        inv,
        Primitive::Translation(scale(epsilon, b)),
        inv,
        Primitive::Dilation((epsilon * s).exp()),
        Primitive::Rotation { axis, angle: epsilon * theta },
        Primitive::Translation(scale(epsilon, a)),
    ])
}

/// The ten infinitesimal conformal transformations of R³.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConformalField {
    Translation(usize),
    Rotation(usize),
    Dilation,
    SpecialConformal(usize),
}

impl ConformalField {
    /// Translations, rotations, dilation, special conformal; axes in x, y, z order.
    pub fn all() -> [ConformalField; 10] {
        use ConformalField::*;
        [
            Translation(0),
            Translation(1),
            Translation(2),
            Rotation(0),
            Rotation(1),
            Rotation(2),
            Dilation,
            SpecialConformal(0),
            SpecialConformal(1),
            SpecialConformal(2),
        ]
    }

    fn axis(i: usize) -> Vec3 {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        e
    }

    pub fn eval(&self, p: Vec3) -> Vec3 {
        match *self {
            ConformalField::Translation(i) => Self::axis(i),
            ConformalField::Rotation(i) => cross(Self::axis(i), p),
            ConformalField::Dilation => p,
            ConformalField::SpecialConformal(i) => {
                let e = Self::axis(i);
                sub(scale(0.5 * dot(p, p), e), scale(p[i], p))
            }
        }
    }

    /// The one-parameter Möbius family generated by this field.
    pub fn flow(&self, t: f64) -> MobiusMap {
        match *self {
            ConformalField::Translation(i) => {
                MobiusMap::identity().then(Primitive::Translation(scale(t, Self::axis(i))))
            }
            ConformalField::Rotation(i) => {
                MobiusMap::identity().then(Primitive::Rotation { axis: Self::axis(i), angle: t })
            }
            ConformalField::Dilation => MobiusMap::identity().then(Primitive::Dilation(t.exp())),
            ConformalField::SpecialConformal(i) => MobiusMap::special_conformal(scale(0.5 * t, Self::axis(i))),
        }
    }
}

/// Normal speed `X(f) · ν` of a conformal field along an R³ immersion.
pub fn normal_component(field: ConformalField, im: &Immersion, geo: &GeometryCache) -> Result<ScalarField> {
    if im.ambient() != Ambient::R3 || geo.ambient() != Ambient::R3 || im.grid() != geo.grid() {
        return Err(Error::GridMismatch);
    }
    let values = (0..im.len()).map(|k| dot(field.eval(im.point(k)), geo.normal_at(k))).collect();
    ScalarField::new(*im.grid(), values)
}

pub fn stereo_to_s3(p: Vec3) -> [f64; 4] {
    let r2 = dot(p, p);
    let d = 1.0 / (1.0 + r2);
    [2.0 * p[0] * d, 2.0 * p[1] * d, 2.0 * p[2] * d, (r2 - 1.0) * d]
}

pub fn stereo_to_r3(y: [f64; 4]) -> Result<Vec3> {
    let d = 1.0 - y[3];
    if d.abs() < 1e-12 {
        return Err(Error::PoleSingularity);
    }
    Ok([y[0] / d, y[1] / d, y[2] / d])
}

/// Length ratio `|dy| / |dx|` of [`stereo_to_s3`] at `p`: `2 / (1 + |p|²)`.
pub fn stereo_conformal_factor(p: Vec3) -> f64 {
    2.0 / (1.0 + dot(p, p))
}

pub fn immersion_to_s3(im: &Immersion) -> Result<Immersion> {
    if im.ambient() != Ambient::R3 {
        return Err(Error::InvalidParameter("expected an R³ immersion".into()));
    }
    let mut coords = (0..4).map(|_| Vec::with_capacity(im.len())).collect::<Vec<_>>();
    for k in 0..im.len() {
        let y = stereo_to_s3(im.point(k));
        for (c, x) in coords.iter_mut().zip(y) {
            c.push(x);
        }
    }
    Immersion::new(*im.grid(), Ambient::S3, coords)
}

pub fn immersion_to_r3(im: &Immersion) -> Result<Immersion> {
    if im.ambient() != Ambient::S3 {
        return Err(Error::InvalidParameter("expected an S³ immersion".into()));
    }
    let pts = (0..im.len()).map(|k| stereo_to_r3(im.point4(k))).collect::<Result<Vec<_>>>()?;
    Immersion::from_points(*im.grid(), &pts)
}
