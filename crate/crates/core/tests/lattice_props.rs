use acf_core::field::FpMatrix;
use acf_core::ideal::{usable_primes, PrimeIdeal};
use acf_core::lattice::{
    ConstructionALattice, GammaChoice, LatticeError, LatticePoint, LinearCode, NestedCode,
};
use acf_core::ring::{Ring, DEFAULT_RINGS};
use acf_core::rng;
use num_complex::Complex64;

/// Nearest point by listing codeword lifts plus ideal elements in a box.
fn brute_nearest(lat: &ConstructionALattice, y: &[Complex64]) -> f64 {
    let id = lat.ideal();
    let ring = lat.ring();
    let [g1, g2] = id.z_basis();
    let s = lat.scale();
    let code = lat.code();
    let p = id.p();
    let mut best = f64::INFINITY;
    for idx in 0..p.pow(code.dim() as u32) {
        let msg: Vec<u64> = (0..code.dim()).map(|j| idx / p.pow(j as u32) % p).collect();
        let cw = code.encode(&msg).unwrap();
        let mut total = 0.0;
        for (yi, &ci) in y.iter().zip(&cw) {
            let base = id.lift_value(ci);
            let mut coord_best = f64::INFINITY;
            for u in -12..=12 {
                for v in -12..=12 {
                    let q = base + g1 * ring.elem(u, 0) + g2 * ring.elem(v, 0);
                    coord_best = coord_best.min((yi - q.embed() * s).norm_sqr());
                }
            }
            total += coord_best;
        }
        best = best.min(total);
    }
    best
}

fn small_codes(p: u64, len: usize) -> Vec<LinearCode> {
    let mut codes = vec![LinearCode::zero(p, len), LinearCode::full(p, len)];
    let mut s = rng::stream(5, p * 10 + len as u64);
    for dim in 1..len {
        for _ in 0..3 {
            codes.push(LinearCode::random(p, len, dim, &mut s));
        }
    }
    if len == 1 {
        codes.truncate(2);
    }
    codes
}

#[test]
fn decoder_matches_brute_force() {
    let mut s = rng::stream(11, 0);
    for d in DEFAULT_RINGS {
        let ring = Ring::new(d).unwrap();
        for (p, _) in usable_primes(&ring, 6) {
            let id = PrimeIdeal::above(&ring, p).unwrap();
            for len in 1..=2 {
                for code in small_codes(p, len) {
                    let lat = ConstructionALattice::new(code, id, 1.7).unwrap();
                    for _ in 0..10 {
                        let y: Vec<Complex64> = (0..len)
                            .map(|_| {
                                Complex64::new(
                                    6.0 * rng::uniform(&mut s) - 3.0,
                                    6.0 * rng::uniform(&mut s) - 3.0,
                                )
                            })
                            .collect();
                        let got = lat.decode_nearest(&y, f64::INFINITY).unwrap();
                        assert!(lat.is_lattice_point(&got.point.coords));
                        let want = brute_nearest(&lat, &y);
                        assert!(
                            (got.dist2 - want).abs() < 1e-9,
                            "d={d} p={p}: {} vs {want}",
                            got.dist2
                        );
                        let ex = lat.decode_exhaustive(&y);
                        assert_eq!(ex.point, got.point);
                    }
                }
            }
        }
    }
}

#[test]
fn decoder_radius_and_length_limits() {
    let ring = Ring::new(-1).unwrap();
    let id = PrimeIdeal::above(&ring, 5).unwrap();
    let lat = ConstructionALattice::new(LinearCode::zero(5, 2), id, 1.0).unwrap();
    let y = vec![Complex64::new(0.3, 0.2); 2];
    assert!(matches!(
        lat.decode_nearest(&y, 1e-3),
        Err(LatticeError::RadiusExhausted { .. })
    ));
    let long = ConstructionALattice::new(LinearCode::zero(5, 9), id, 1.0).unwrap();
    assert!(matches!(
        long.decode_nearest(&vec![Complex64::new(0.0, 0.0); 9], 1.0),
        Err(LatticeError::BlockTooLong { .. })
    ));
}

#[test]
fn lattice_closed_under_ring_combinations() {
    let mut s = rng::stream(12, 0);
    for d in DEFAULT_RINGS {
        let ring = Ring::new(d).unwrap();
        let (p, _) = usable_primes(&ring, 30)[2];
        let id = PrimeIdeal::above(&ring, p).unwrap();
        let code = LinearCode::random(p, 3, 2, &mut s);
        let lat = ConstructionALattice::new(code.clone(), id, 1.0).unwrap();
        let draw = |s: &mut rng::Stream| -> LatticePoint {
            let msg: Vec<u64> = (0..2)
                .map(|_| (rng::uniform(s) * p as f64) as u64)
                .collect();
            lat.lift(&code.encode(&msg).unwrap())
        };
        for _ in 0..100 {
            let x = draw(&mut s);
            let y = draw(&mut s);
            let a = ring.elem(3, -2);
            let b = ring.elem(-1, 4);
            let z = x.scale_by(a).add(&y.scale_by(b));
            assert!(lat.is_lattice_point(&z.coords));
            let r = lat.reduce_point(&z).unwrap();
            assert!(lat.is_lattice_point(&r.coords) && r.is_zero());
        }
    }
}

#[test]
fn coarse_nests_in_fine() {
    let ring = Ring::new(-3).unwrap();
    let id = PrimeIdeal::above(&ring, 7).unwrap();
    let g_c = FpMatrix::from_rows(7, &[vec![1], vec![2], vec![3]]);
    let g_t = FpMatrix::from_rows(7, &[vec![0], vec![1], vec![5]]);
    let nested = NestedCode::build(g_c, g_t, id, 10.0, GammaChoice::ClosedForm).unwrap();
    let coarse = nested.coarse();
    for idx in 0..7 {
        let x = coarse.lift(&coarse.code().encode(&[idx]).unwrap());
        assert!(nested.fine().is_lattice_point(&x.coords));
        assert_eq!(nested.message_of(&x).unwrap(), vec![0]);
    }
    let book = nested.enumerate_codebook().unwrap();
    assert_eq!(book.len(), 7);
    for (w, t) in &book {
        assert_eq!(&nested.message_of(t).unwrap(), w);
    }
}

#[test]
fn dither_second_moment_matches_codebook_scale() {
    let ring = Ring::new(-1).unwrap();
    let id = PrimeIdeal::above(&ring, 5).unwrap();
    let lat = ConstructionALattice::new(LinearCode::zero(5, 2), id, 1.0).unwrap();
    // 𝔭^2 scaled: a square lattice of side √p·s per coordinate, so σ² = vol/6 per complex dim
    let m = lat.estimate_second_moment(20_000, 3).unwrap();
    let side2 = 5.0 * lat.scale() * lat.scale();
    let expected = side2 / 6.0;
    assert!(
        (m.sigma2 - expected).abs() < 4.0 * m.sigma2_stderr + 1e-3,
        "{} vs {expected}",
        m.sigma2
    );
    assert!((m.g - 1.0 / 12.0).abs() < 4.0 * m.g_stderr + 1e-4);
    let pt = lat.sample_voronoi(&mut rng::stream(1, 1)).unwrap();
    assert_eq!(pt.len(), 2);
}
