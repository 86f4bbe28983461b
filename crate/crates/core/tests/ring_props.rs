use acf_core::ring::{Ring, DEFAULT_RINGS};
use num_complex::Complex64;
use proptest::prelude::*;

fn ring_strategy() -> impl Strategy<Value = Ring> {
    prop::sample::select(DEFAULT_RINGS.to_vec()).prop_map(|d| Ring::new(d).unwrap())
}

proptest! {
    #[test]
    fn norm_is_multiplicative(ring in ring_strategy(), a in -500i64..500, b in -500i64..500,
                              c in -500i64..500, e in -500i64..500) {
        let x = ring.elem(a, b);
        let y = ring.elem(c, e);
        prop_assert_eq!((x * y).norm(), x.norm() * y.norm());
    }

    #[test]
    fn embedding_is_a_homomorphism(ring in ring_strategy(), a in -300i64..300, b in -300i64..300,
                                   c in -300i64..300, e in -300i64..300) {
        let x = ring.elem(a, b);
        let y = ring.elem(c, e);
        prop_assert!(((x + y).embed() - (x.embed() + y.embed())).norm() < 1e-9);
        prop_assert!(((x * y).embed() - x.embed() * y.embed()).norm() < 1e-6);
        prop_assert!((x.embed().norm_sqr() - x.norm() as f64).abs() < 1e-6);
    }

    #[test]
    fn quantize_is_nearest(ring in ring_strategy(), re in -20.0f64..20.0, im in -20.0f64..20.0) {
        let z = Complex64::new(re, im);
        let q = ring.quantize(z);
        let got = (z - q.embed()).norm_sqr();
        let bmax = (20.0 / ring.xi().im) as i64 + 3;
        for a in -25..=25 {
            for b in -bmax..=bmax {
                let other = (z - ring.elem(a, b).embed()).norm_sqr();
                prop_assert!(got <= other + 1e-9);
            }
        }
        prop_assert_eq!(ring.quantize(q.embed()), q);
    }
}

#[test]
fn quantize_fixed_point() {
    let ring = Ring::new(-6).unwrap();
    assert_eq!(ring.quantize(Complex64::new(0.0, 2.449)), ring.sqrt_d());
    let g = Ring::new(-1).unwrap();
    assert_eq!(g.quantize(Complex64::new(0.4, -0.4)), g.zero());
}

#[test]
fn units_have_norm_one() {
    for d in DEFAULT_RINGS {
        let ring = Ring::new(d).unwrap();
        let units = ring.units();
        let expected = match d {
            -1 => 4,
            -3 => 6,
            _ => 2,
        };
        assert_eq!(units.len(), expected, "d={d}");
        assert!(units.iter().all(|u| u.norm() == 1));
    }
}

#[test]
fn rejects_bad_d() {
    assert!(Ring::new(-4).is_err());
    assert!(Ring::new(3).is_err());
    assert!(Ring::new(0).is_err());
}
