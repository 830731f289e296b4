use proptest::prelude::*;
use willmore_core::io::{read_obj, write_obj};
use willmore_core::mobius::{stereo_to_r3, stereo_to_s3};
use willmore_core::{
    revolution_torus, willmore_energy, MobiusMap, ParamGrid, Primitive, ScalarField, SpectralModel, TWO_PI_SQUARED,
};

fn point() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-3.0..3.0f64)
}

fn primitive() -> impl Strategy<Value = Primitive> {
    prop_oneof![
        point().prop_map(Primitive::Translation),
        (point(), -3.0..3.0f64).prop_filter_map("zero axis", |(a, angle)| {
            let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
            (n > 1e-3).then(|| Primitive::Rotation { axis: a.map(|x| x / n), angle })
        }),
        (0.2..5.0f64).prop_map(Primitive::Dilation),
        (point(), 0.2..3.0f64).prop_map(|(center, radius)| Primitive::SphereInversion { center, radius }),
    ]
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mobius_inverse_undoes_map(prims in prop::collection::vec(primitive(), 1..5), p in point()) {
        let m = MobiusMap::from_primitives(prims).unwrap();
        // points near a pole of the map are excluded by design
        if let Ok(q) = m.apply(p) {
            if let Ok(back) = m.inverse().apply(q) {
                let scale = 1.0 + q.iter().map(|x| x.abs()).fold(0.0, f64::max);
                prop_assert!(dist(back, p) < 1e-9 * scale * scale, "{back:?} vs {p:?}");
            }
        }
    }

    #[test]
    fn composition_is_sequential_application(
        a in prop::collection::vec(primitive(), 1..3),
        b in prop::collection::vec(primitive(), 1..3),
        p in point(),
    ) {
        let (ma, mb) = (MobiusMap::from_primitives(a).unwrap(), MobiusMap::from_primitives(b).unwrap());
        if let Ok(q) = mb.apply(p).and_then(|q| ma.apply(q)) {
            let r = MobiusMap::compose(&ma, &mb).apply(p).unwrap();
            prop_assert!(dist(q, r) == 0.0);
        }
    }

    #[test]
    fn stereographic_projection_round_trips(p in point()) {
        let y = stereo_to_s3(p);
        let norm: f64 = y.iter().map(|x| x * x).sum();
        prop_assert!((norm - 1.0).abs() < 1e-14);
        prop_assert!(dist(stereo_to_r3(y).unwrap(), p) < 1e-12 * (1.0 + p.iter().map(|x| x * x).sum::<f64>()));
    }

    #[test]
    fn obj_round_trip_is_bit_exact(major in 1.2..4.0f64, minor in 0.2..1.0f64, half in 4usize..9) {
        let t = revolution_torus(major, minor, ParamGrid::torus(2 * half).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_obj(&mut buf, &t, &[]).unwrap();
        prop_assert_eq!(read_obj(buf.as_slice()).unwrap(), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kernel_projectors_are_complementary(coeffs in prop::collection::vec(-1.0..1.0f64, 12)) {
        let model = SpectralModel::new(16).unwrap();
        let g = *model.grid();
        let u = ScalarField::from_fn(g, |x, y| {
            coeffs.chunks(3).enumerate().map(|(k, c)| {
                let k = k as f64;
                c[0] * (k * x).cos() + c[1] * (k * y).sin() + c[2] * (x + k * y).cos()
            }).sum()
        });
        let pk = model.project_k(&u).unwrap();
        let pp = model.project_kperp(&u).unwrap();
        prop_assert!(pk.add(&pp).unwrap().sub(&u).unwrap().max_abs() < 1e-12);
        prop_assert!(model.kernel_coefficients(&pp).unwrap().iter().all(|c| c.abs() < 1e-12));
        prop_assert!(model.project_k(&pk).unwrap().sub(&pk).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn revolution_tori_never_beat_the_clifford_energy(ratio in 1.05..4.0f64, minor in 0.3..2.0f64) {
        let t = revolution_torus(ratio * minor, minor, ParamGrid::torus(48).unwrap()).unwrap();
        let w = willmore_energy(&t).unwrap();
        prop_assert!(w >= TWO_PI_SQUARED - 1e-8, "W = {w}");
    }
}
