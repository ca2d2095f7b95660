use std::f64::consts::SQRT_2;

use proptest::prelude::*;
use reebkit::geometry::{deck_action, flow, flow_numeric, mul_i, reeb_vector, sphere_frame};
use reebkit::{ContactSystem, LensParams, Point4};

fn point() -> impl Strategy<Value = Point4> {
    (0.05f64..0.95, -3.2f64..3.2, -3.2f64..3.2)
        .prop_map(|(s, a, b)| Point4::from_polar(s.sqrt(), a, (1.0 - s).sqrt(), b).unwrap())
}

fn tangent(p: &Point4, c: [f64; 3]) -> [f64; 4] {
    let e = sphere_frame(p);
    std::array::from_fn(|k| c[0] * e[0][k] + c[1] * e[1][k] + c[2] * e[2][k])
}

fn ellipsoid() -> impl Strategy<Value = ContactSystem> {
    (0.6f64..1.6, 0.6f64..1.6).prop_map(|(a, b)| ContactSystem::ellipsoid(a, b).unwrap())
}

/// `dφ_t` of the toric flow acts on tangent vectors by the same rotations as on points.
fn push_forward(sys: &ContactSystem, v: &[f64; 4], t: f64) -> [f64; 4] {
    let (wz, ww) = sys.rates();
    let (sz, cz) = (wz * t).sin_cos();
    let (sw, cw) = (ww * t).sin_cos();
    [
        cz * v[0] - sz * v[1],
        sz * v[0] + cz * v[1],
        cw * v[2] - sw * v[3],
        sw * v[2] + cw * v[3],
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flow_preserves_lambda(sys in ellipsoid(), p in point(), c in prop::array::uniform3(-1.0f64..1.0), t in 0.0f64..10.0) {
        let tol = 1e-10;
        let v = tangent(&p, c);
        let q = flow(&sys, &p, t, tol).unwrap();
        let before = sys.lambda(&p, &v);
        let after = sys.lambda(&q, &push_forward(&sys, &v, t));
        prop_assert!((before - after).abs() < 10.0 * tol);
    }

    #[test]
    fn reeb_field_normalization(sys in ellipsoid(), p in point(), c in prop::array::uniform3(-1.0f64..1.0)) {
        let r = reeb_vector(&sys, &p).unwrap();
        prop_assert!((sys.lambda(&p, &r.v) - 1.0).abs() < 1e-10);
        let v = tangent(&p, c);
        prop_assert!(sys.dlambda(&p, &r.v, &v).abs() < 1e-8);
        prop_assert!(sys.dlambda(&p, &r.v, &mul_i(&v)).abs() < 1e-8);
        let closed = sys.reeb_closed_form(&p);
        for k in 0..4 {
            prop_assert!((closed[k] - r.v[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn flow_commutes_with_deck_action(p in point(), t in -5.0f64..5.0, k in 0i64..12, pq in (2u32..12).prop_flat_map(|p| (Just(p), 1..p))) {
        prop_assume!(reebkit::geometry::gcd(pq.0 as u64, pq.1 as u64) == 1);
        let lens = LensParams::new(pq.0, pq.1).unwrap();
        let sys = ContactSystem::ellipsoid(1.0, SQRT_2).unwrap().with_lens(lens);
        let a = flow(&sys, &deck_action(&lens, k, &p), t, 1e-10).unwrap();
        let b = deck_action(&lens, k, &flow(&sys, &p, t, 1e-10).unwrap());
        prop_assert!(a.distance(&b) < 1e-8);
    }
}

#[test]
fn numeric_flow_tracks_closed_form_up_to_t_20() {
    let tol = 1e-10;
    let sys = ContactSystem::ellipsoid(1.0, SQRT_2).unwrap();
    let p = Point4::from_polar(0.6, 0.3, 0.8, -1.1).unwrap();
    for i in 1..=4 {
        let t = 5.0 * i as f64;
        let a = flow(&sys, &p, t, tol).unwrap();
        let b = flow_numeric(&sys, &p, t, tol).unwrap();
        assert!(a.distance(&b) < 100.0 * tol, "t = {t}");
    }
}
