use std::f64::consts::{PI, SQRT_2};

use reebkit::geometry::deck_action;
use reebkit::section::{
    area_distortion, build_page, fixed_point, linking_with_binding, return_map, sample_starts, verify_main3,
    Direction, Quadrilateral, VerifyOptions,
};
use reebkit::{ClosedOrbit, ContactSystem, LensParams, OrbitLabel};

const SEED: u64 = 424242;

fn quotient() -> ContactSystem {
    ContactSystem::ellipsoid(1.0, SQRT_2)
        .unwrap()
        .with_lens(LensParams::new(2, 1).unwrap())
}

#[test]
fn sampled_starts_return_both_ways() {
    let page = build_page(&quotient(), 0.0).unwrap();
    for s in sample_starts(SEED, 100) {
        let f = return_map(&page, s, Direction::Forward, 1e-10).unwrap();
        let b = return_map(&page, s, Direction::Backward, 1e-10).unwrap();
        assert!(f.return_time > 0.0 && b.return_time > 0.0);
        assert!((f.return_time - SQRT_2 / 2.0).abs() < 1e-8);
        let back = return_map(&page, f.image, Direction::Backward, 1e-10).unwrap();
        assert!((back.image.0 - s.0).abs() < 1e-6);
    }
}

#[test]
fn return_map_preserves_area() {
    let page = build_page(&quotient(), 0.0).unwrap();
    for i in 0..20 {
        let r0 = 0.15 + 0.03 * i as f64;
        let t0 = 0.3 * i as f64;
        let q = Quadrilateral {
            r: (r0, r0 + 0.05),
            theta: (t0, t0 + 0.1),
        };
        assert!(area_distortion(&page, &q, 32).unwrap() < 1e-4);
    }
}

#[test]
fn fixed_point_is_the_second_orbit() {
    let sys = quotient();
    let page = build_page(&sys, 0.7).unwrap();
    let fp = fixed_point(&page, 1e-10).unwrap();
    assert!(fp.point[0].hypot(fp.point[1]) < 1e-6);
    let kp = ClosedOrbit::principal(sys, OrbitLabel::KPrime, 1).unwrap();
    assert!((fp.return_time - kp.prime_period).abs() < 1e-6);
}

#[test]
fn return_map_is_deck_equivariant() {
    let sys = ContactSystem::ellipsoid(1.0, 1.3)
        .unwrap()
        .with_lens(LensParams::new(5, 2).unwrap());
    let lens = sys.lens_or_sphere();
    let page = build_page(&sys, 0.0).unwrap();
    for s in sample_starts(SEED + 1, 5) {
        let rec = return_map(&page, s, Direction::Forward, 1e-10).unwrap();
        for k in 0..5 {
            let c = page.coordinates(&deck_action(&lens, k, &rec.endpoint)).unwrap();
            assert!((c.0 - rec.image.0).abs() < 1e-10);
        }
    }
}

#[test]
fn collar_orbits_link_positively() {
    for p in [1u32, 2, 3, 6] {
        let sys = ContactSystem::round().with_lens(LensParams::new(p, 1).unwrap());
        let page = build_page(&sys, 0.0).unwrap();
        for j in 0..8 {
            let anchor = page.lift(0.99, 0.8 * j as f64).unwrap();
            let deck = if p == 1 { 0 } else { 1 };
            let o = ClosedOrbit::new(sys, anchor, PI / p as f64, 1, deck).unwrap();
            assert!(linking_with_binding(&o, &page).unwrap() >= 1);
        }
    }
}

#[test]
fn verify_examples() {
    let r = verify_main3(
        &quotient(),
        5.0,
        100,
        &VerifyOptions {
            seed: SEED,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(r.passed, "{:?}", r.failures());
    assert_eq!(r.binding.self_linking, -2);
    assert_eq!(r.binding.mu_p, 3);
    assert_eq!(r.dynamics.forward_returns, 100);

    let swapped = ContactSystem::ellipsoid(SQRT_2, 1.0)
        .unwrap()
        .with_lens(LensParams::new(2, 1).unwrap());
    let r = verify_main3(
        &swapped,
        5.0,
        10,
        &VerifyOptions {
            seed: SEED,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.binding.mu_p, 5);
    assert!((r.binding.rho_p - (1.0 + SQRT_2)).abs() < 1e-6);

    assert!(verify_main3(
        &ContactSystem::round().with_lens(LensParams::new(2, 1).unwrap()),
        5.0,
        0,
        &VerifyOptions::default()
    )
    .is_err());
}
