use std::f64::consts::SQRT_2;

use reebkit::index::{cz_geometric, cz_spectral, mu_tilde};
use reebkit::orbits::{
    asymptotic_loop, catalog, linearized_path, orbit_index, orbit_index_with, FrameKind, IndexOptions,
    TransverseFrame,
};
use reebkit::{ClosedOrbit, ContactSystem, LensParams, OrbitLabel};

fn e12() -> ContactSystem {
    ContactSystem::ellipsoid(1.0, SQRT_2).unwrap()
}

#[test]
fn spectral_and_geometric_agree_on_catalogued_orbits() {
    for sys in [e12(), e12().with_lens(LensParams::new(2, 1).unwrap())] {
        for o in catalog(&sys, 3.0).unwrap() {
            let k = o.multiplicity;
            if !o.is_contractible(k) {
                continue;
            }
            let ix = orbit_index_with(
                &o,
                k,
                &IndexOptions {
                    frame: FrameKind::Global,
                    spectral: true,
                },
            )
            .unwrap();
            assert!(!ix.degenerate);
            assert_eq!(ix.mu_spectral, Some(ix.mu), "{:?}^{k}", o.label);
        }
    }
}

#[test]
fn short_orbit_indices_follow_mu_tilde() {
    let o = ClosedOrbit::principal(e12(), OrbitLabel::K, 1).unwrap();
    for k in 1..=5u32 {
        let x = k as f64 * (1.0 + 1.0 / SQRT_2);
        assert_eq!(orbit_index(&o, k).unwrap().mu, mu_tilde(x, x).unwrap(), "k = {k}");
    }
}

#[test]
fn frame_change_rule() {
    let o = ClosedOrbit::principal(e12(), OrbitLabel::K, 1).unwrap();
    for k in 1..=2u32 {
        let base = TransverseFrame::build(&o, k, FrameKind::Global).unwrap();
        let mu0 = cz_geometric(&linearized_path(&o, k, &base).unwrap()).unwrap().mu;
        for m in -3i64..=3 {
            let f = TransverseFrame::build(&o, k, FrameKind::Twisted(m)).unwrap();
            let mu = cz_geometric(&linearized_path(&o, k, &f).unwrap()).unwrap().mu;
            assert_eq!(mu0 - mu, 2 * m);
            let s = asymptotic_loop(&o, k, &f).unwrap();
            assert_eq!(cz_spectral(&s).unwrap().mu, mu);
        }
    }
}

#[test]
fn catalog_closure_and_rho_additivity() {
    for (p, q) in [(1, 1), (2, 1), (3, 1), (5, 2)] {
        let sys = ContactSystem::ellipsoid(1.0, 1.0 + 1.0 / SQRT_2)
            .unwrap()
            .with_lens(LensParams::new(p, q).unwrap());
        let cat = catalog(&sys, 6.0).unwrap();
        assert!(!cat.is_empty());
        for o in &cat {
            assert!(o.closure_defect() < 1e-8);
        }
        for label in [OrbitLabel::K, OrbitLabel::KPrime] {
            let o = ClosedOrbit::principal(sys, label, 1).unwrap();
            let r1 = orbit_index(&o, p).unwrap().rho;
            let r2 = orbit_index(&o, 2 * p).unwrap().rho;
            assert!((r2 - 2.0 * r1).abs() < 1e-6, "L({p},{q}) {label:?}");
        }
    }
}

#[test]
fn orbit_records_serialize() {
    let o = ClosedOrbit::principal(e12(), OrbitLabel::KPrime, 2).unwrap();
    let s = serde_json::to_string(&o).unwrap();
    let back: ClosedOrbit = serde_json::from_str(&s).unwrap();
    assert_eq!(back, o);
    assert!(s.contains("\"K'\""));
}
