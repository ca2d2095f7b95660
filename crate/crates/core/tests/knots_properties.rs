use proptest::prelude::*;
use reebkit::geometry::gcd;
use reebkit::knots::{
    binding_sl_numeric, classification_table, lens_binding_monodromy, lens_homeomorphic,
    lens_homotopy_equivalent, monodromy_from_winding, self_linking_from_winding, slope_intersection, Binding,
    PDisk,
};
use reebkit::LensParams;

fn coprime(p: u32) -> Vec<u32> {
    (1..p.max(2)).filter(|&q| gcd(p as u64, q as u64) == 1).collect()
}

#[test]
fn binding_invariants_up_to_p_12() {
    for p in 1..=12u32 {
        for q in coprime(p) {
            let lens = LensParams::new(p, q).unwrap();
            let disk = PDisk::new(lens, Binding::ZCircle);
            let sl = binding_sl_numeric(&disk).unwrap();
            assert_eq!(sl, -(p as i64), "L({p},{q})");
            assert_eq!(sl, self_linking_from_winding(p, -1).unwrap());
            assert_eq!(lens_binding_monodromy(&lens), ((p - q) % p), "L({p},{q})");
        }
    }
}

#[test]
fn classification_is_an_equivalence_up_to_p_50() {
    for p in 2..=50u32 {
        let qs = coprime(p);
        for &a in &qs {
            assert!(lens_homeomorphic(p, a, a).unwrap());
            assert!(lens_homotopy_equivalent(p, a, a).unwrap());
            for &b in &qs {
                let h = lens_homeomorphic(p, a, b).unwrap();
                let e = lens_homotopy_equivalent(p, a, b).unwrap();
                assert_eq!(h, lens_homeomorphic(p, b, a).unwrap());
                assert_eq!(e, lens_homotopy_equivalent(p, b, a).unwrap());
                assert!(!h || e, "L({p},{a}) ≅ L({p},{b}) but not homotopy equivalent");
                for &c in &qs {
                    if h && lens_homeomorphic(p, b, c).unwrap() {
                        assert!(lens_homeomorphic(p, a, c).unwrap());
                    }
                    if e && lens_homotopy_equivalent(p, b, c).unwrap() {
                        assert!(lens_homotopy_equivalent(p, a, c).unwrap());
                    }
                }
            }
        }
        let t = classification_table(p).unwrap();
        let covered: usize = t.homeomorphism_classes.iter().map(|c| c.len()).sum();
        assert_eq!(covered, qs.len());
    }
}

proptest! {
    #[test]
    fn monodromy_ignores_frame_shift(p in 1u32..40, w in -100i64..100, m in -10i64..10) {
        prop_assert_eq!(
            monodromy_from_winding(p, w).unwrap(),
            monodromy_from_winding(p, w + p as i64 * m).unwrap()
        );
    }

    #[test]
    fn slope_intersection_is_symmetric(a in -50i64..50, b in -50i64..50, c in -50i64..50, d in -50i64..50) {
        prop_assert_eq!(slope_intersection(a, b, c, d), slope_intersection(c, d, a, b));
    }
}
