//! Rational primes in imaginary quadratic rings: how they decompose, an
//! explicit prime ideal above each usable prime, and the reduction map
//! `σ : O_K → O_K/𝔭 ≅ F_p` together with its coset lift.
//!
//! Only ideals with inertial degree one (split or ramified odd primes) are
//! supported; for those the residue field is `F_p` and the rational integers
//! `0..p` form a complete set of coset representatives.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{inv_mod, mul_mod, pow_mod, reduce, FpElem};
use crate::ring::{QuadInt, Ring, XiCase};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdealError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("p = 2 is not supported; prime ideals are built for odd primes only")]
    EvenPrime,
    #[error("{p} is inert in Q(√{d}); residue field F_{p}^2 is not supported")]
    Inert { p: u64, d: i64 },
    #[error("element of Q(√{got}) used with an ideal of Q(√{expected})")]
    RingMismatch { expected: i64, got: i64 },
    #[error("{value} is not a residue modulo {p}")]
    BadResidue { value: u64, p: u64 },
}

/// Deterministic Miller-Rabin; the base set is exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Kronecker symbol `(Δ / p)` for a prime `p`.
pub fn kronecker(delta: i64, p: u64) -> Result<i8, IdealError> {
    if !is_prime(p) {
        return Err(IdealError::NotPrime(p));
    }
    if p == 2 {
        return Ok(match delta.rem_euclid(8) {
            0 | 2 | 4 | 6 => 0,
            1 | 7 => 1,
            _ => -1,
        });
    }
    let a = reduce(delta, p);
    if a == 0 {
        return Ok(0);
    }
    // Euler's criterion
    Ok(if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    })
}

/// Square root of `n` modulo an odd prime `p` by Tonelli-Shanks, or `None`
/// if `n` is a non-residue. The quadratic non-residue is searched upward
/// from 2, so the output is deterministic.
pub fn sqrt_mod(n: u64, p: u64) -> Option<u64> {
    let n = n % p;
    if n == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(n);
    }
    if pow_mod(n, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(n, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0u32;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(n, q, p);
    let mut r = pow_mod(n, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimeKind {
    Split,
    Ramified,
    Inert,
}

impl fmt::Display for PrimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrimeKind::Split => "split",
            PrimeKind::Ramified => "ramified",
            PrimeKind::Inert => "inert",
        })
    }
}

/// Decomposition type of `p` in the ring, read off the Kronecker symbol of
/// the discriminant.
pub fn classify_prime(ring: &Ring, p: u64) -> Result<PrimeKind, IdealError> {
    Ok(match kronecker(ring.discriminant(), p)? {
        1 => PrimeKind::Split,
        0 => PrimeKind::Ramified,
        _ => PrimeKind::Inert,
    })
}

/// Odd primes below `bound` that are split or ramified in `ring`.
pub fn usable_primes(ring: &Ring, bound: u64) -> Vec<(u64, PrimeKind)> {
    (3..bound)
        .filter(|&p| is_prime(p))
        .filter_map(|p| match classify_prime(ring, p) {
            Ok(PrimeKind::Inert) | Err(_) => None,
            Ok(kind) => Some((p, kind)),
        })
        .collect()
}

/// A prime ideal of norm `p` above an odd split or ramified prime.
///
/// Split: `𝔭 = (p, a0 + √d)` with `a0² ≡ d (mod p)`, so `√d ≡ -a0 (mod 𝔭)`.
/// Ramified: `𝔭 = (p, √d)`, so `√d ≡ 0 (mod 𝔭)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeIdeal {
    ring: Ring,
    p: u64,
    kind: PrimeKind,
    a0: Option<u64>,
    /// `σ(ξ)`, which determines `σ` on the whole ring.
    xi_image: u64,
}

impl PrimeIdeal {
    /// Prime ideal above `p`. The square root `a0` is normalized to the
    /// smaller of the two roots in `[0, p)`.
    pub fn above(ring: &Ring, p: u64) -> Result<PrimeIdeal, IdealError> {
        let kind = classify_prime(ring, p)?;
        if p == 2 {
            return Err(IdealError::EvenPrime);
        }
        let a0 = match kind {
            PrimeKind::Inert => return Err(IdealError::Inert { p, d: ring.d() }),
            PrimeKind::Ramified => None,
            PrimeKind::Split => {
                let root = sqrt_mod(reduce(ring.d(), p), p)
                    .expect("d is a quadratic residue modulo a split prime");
                Some(root.min(p - root))
            }
        };
        let sqrt_d_image = a0.map_or(0, |a| (p - a) % p);
        let xi_image = match ring.xi_case() {
            XiCase::Whole => sqrt_d_image,
            XiCase::Half => {
                let inv2 = inv_mod(2, p).expect("p is odd");
                mul_mod((1 + sqrt_d_image) % p, inv2, p)
            }
        };
        Ok(PrimeIdeal {
            ring: *ring,
            p,
            kind,
            a0,
            xi_image,
        })
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn kind(&self) -> PrimeKind {
        self.kind
    }

    pub fn a0(&self) -> Option<u64> {
        self.a0
    }

    /// `N(𝔭) = p^f`; always `p` here.
    pub fn norm(&self) -> u64 {
        self.p
    }

    pub fn inertial_degree(&self) -> u32 {
        1
    }

    pub fn xi_image(&self) -> u64 {
        self.xi_image
    }

    /// The two ideal generators: `(p, a0 + √d)` or `(p, √d)`.
    pub fn generators(&self) -> (QuadInt, QuadInt) {
        let p = self.ring.elem(self.p as i64, 0);
        let shift = self.ring.elem(self.a0.unwrap_or(0) as i64, 0);
        (p, shift + self.ring.sqrt_d())
    }

    /// A `Z`-basis `{p, c + ξ}` of `𝔭` as a lattice in the plane.
    pub fn z_basis(&self) -> [QuadInt; 2] {
        let c = (self.p - self.xi_image) % self.p;
        [
            self.ring.elem(self.p as i64, 0),
            self.ring.elem(c as i64, 1),
        ]
    }

    fn check_ring(&self, x: &QuadInt) -> Result<(), IdealError> {
        if x.ring() != self.ring {
            return Err(IdealError::RingMismatch {
                expected: self.ring.d(),
                got: x.ring().d(),
            });
        }
        Ok(())
    }

    /// `σ(a + bξ) = a + b·σ(ξ) mod p`.
    pub fn sigma(&self, x: &QuadInt) -> Result<FpElem, IdealError> {
        self.check_ring(x)?;
        Ok(FpElem::new(0, self.p) + self.sigma_raw(x.a, x.b))
    }

    #[inline]
    pub(crate) fn sigma_raw(&self, a: i64, b: i64) -> FpElem {
        let p = self.p;
        let v = (reduce(a, p) + mul_mod(reduce(b, p), self.xi_image, p)) % p;
        FpElem::new(v as i64, p)
    }

    /// σ of every coordinate as plain residues.
    pub fn sigma_vec(&self, xs: &[QuadInt]) -> Result<Vec<u64>, IdealError> {
        xs.iter()
            .map(|x| self.sigma(x).map(|e| e.value()))
            .collect()
    }

    /// Canonical coset representative: the rational integer `c` in `[0, p)`.
    pub fn lift(&self, c: FpElem) -> Result<QuadInt, IdealError> {
        if c.modulus() != self.p {
            return Err(IdealError::BadResidue {
                value: c.value(),
                p: self.p,
            });
        }
        Ok(self.ring.elem(c.value() as i64, 0))
    }

    pub fn lift_value(&self, c: u64) -> QuadInt {
        self.ring.elem((c % self.p) as i64, 0)
    }

    /// Membership in `𝔭` through the `Z`-basis.
    pub fn contains(&self, x: &QuadInt) -> bool {
        let [_, g] = self.z_basis();
        // x = m·p + b·(c + ξ)  ⇔  p | (a - b·c)
        let rem = x.a as i128 - x.b as i128 * g.a as i128;
        x.ring() == self.ring && rem.rem_euclid(self.p as i128) == 0
    }
}

impl fmt::Display for PrimeIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.a0 {
            Some(a) => write!(f, "({}, {}+√{})", self.p, a, self.ring.d()),
            None => write!(f, "({}, √{})", self.p, self.ring.d()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(d: i64) -> Ring {
        Ring::new(d).unwrap()
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            small,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(561));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(-20, 23), Ok(1));
        assert_eq!(kronecker(-20, 5), Ok(0));
        // no x with x^2 = -20 = 6 (mod 13)
        assert!((0..13u64).all(|x| (x * x) % 13 != 6));
        assert_eq!(kronecker(-20, 13), Ok(-1));
        assert_eq!(kronecker(-20, 15), Err(IdealError::NotPrime(15)));
        assert_eq!(kronecker(-3, 2), Ok(-1));
        assert_eq!(kronecker(-7, 2), Ok(1));
        assert_eq!(kronecker(-4, 2), Ok(0));
    }

    #[test]
    fn kronecker_matches_residue_search() {
        for delta in [-3i64, -4, -7, -8, -20, -24] {
            for p in (3..200u64).filter(|&p| is_prime(p)) {
                let a = reduce(delta, p);
                let expected = if a == 0 {
                    0
                } else if (1..p).any(|x| x * x % p == a) {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(delta, p).unwrap(), expected, "({delta}/{p})");
            }
        }
    }

    #[test]
    fn classification_examples() {
        let r = ring(-5);
        assert_eq!(classify_prime(&r, 23), Ok(PrimeKind::Split));
        assert_eq!(classify_prime(&r, 5), Ok(PrimeKind::Ramified));
        assert_eq!(classify_prime(&r, 13), Ok(PrimeKind::Inert));
    }

    #[test]
    fn tonelli_shanks_roots() {
        for p in (3..400u64).filter(|&p| is_prime(p)) {
            for n in 0..p {
                match sqrt_mod(n, p) {
                    Some(r) => assert_eq!(r * r % p, n),
                    None => assert!((0..p).all(|x| x * x % p != n)),
                }
            }
        }
        // p = 1 (mod 8) exercises the full loop
        assert_eq!(sqrt_mod(10, 41).map(|r| r * r % 41), Some(10));
    }

    #[test]
    fn worked_prime_ideals() {
        let i = PrimeIdeal::above(&ring(-5), 23).unwrap();
        assert_eq!(i.kind(), PrimeKind::Split);
        assert_eq!(i.a0(), Some(8));
        assert_eq!(i.norm(), 23);
        assert_eq!(i.to_string(), "(23, 8+√-5)");
        let (g0, g1) = i.generators();
        assert_eq!((g0, g1), (ring(-5).elem(23, 0), ring(-5).elem(8, 1)));

        let r = PrimeIdeal::above(&ring(-5), 5).unwrap();
        assert_eq!(r.kind(), PrimeKind::Ramified);
        assert_eq!(r.to_string(), "(5, √-5)");

        let g = PrimeIdeal::above(&ring(-1), 5).unwrap();
        assert_eq!(g.a0(), Some(2));
        assert_eq!(g.to_string(), "(5, 2+√-1)");
    }

    #[test]
    fn rejected_primes() {
        assert_eq!(
            PrimeIdeal::above(&ring(-5), 13),
            Err(IdealError::Inert { p: 13, d: -5 })
        );
        assert_eq!(PrimeIdeal::above(&ring(-7), 2), Err(IdealError::EvenPrime));
        assert_eq!(
            PrimeIdeal::above(&ring(-5), 21),
            Err(IdealError::NotPrime(21))
        );
    }

    #[test]
    fn sigma_examples() {
        let r = ring(-5);
        let i = PrimeIdeal::above(&r, 23).unwrap();
        assert_eq!(i.sigma(&r.elem(8, 1)).unwrap().value(), 0);
        assert_eq!(i.sigma(&r.elem(23, 0)).unwrap().value(), 0);
        assert_eq!(i.sigma(&r.elem(1, 1)).unwrap().value(), 16);
        // oracle: subtract small combinations of the generators until the
        // remainder is a rational integer in 0..23
        let x = r.elem(1, 1);
        let mut hit = None;
        'search: for m in -3i64..=3 {
            for n in -3i64..=3 {
                let rest = x - r.elem(23 * m, 0) - r.elem(8, 1) * r.elem(n, 0);
                if rest.b == 0 && (0..23).contains(&rest.a) {
                    hit = Some(rest.a);
                    break 'search;
                }
            }
        }
        assert_eq!(hit, Some(16));
    }

    #[test]
    fn sigma_rejects_foreign_elements() {
        let i = PrimeIdeal::above(&ring(-5), 23).unwrap();
        let x = ring(-1).one();
        assert_eq!(
            i.sigma(&x),
            Err(IdealError::RingMismatch {
                expected: -5,
                got: -1
            })
        );
    }

    #[test]
    fn lift_round_trips_and_multiplies() {
        let r = ring(-5);
        let i = PrimeIdeal::above(&r, 23).unwrap();
        assert_eq!(i.lift(FpElem::new(0, 23)).unwrap(), r.zero());
        let c = FpElem::new(16, 23);
        assert_eq!(i.lift(c).unwrap(), r.elem(16, 0));
        assert_eq!(i.sigma(&i.lift(c).unwrap()).unwrap(), c);
        for u in 0..23 {
            for v in 0..23 {
                let x = i.lift(FpElem::new(u, 23)).unwrap();
                let y = i.lift(FpElem::new(v, 23)).unwrap();
                assert_eq!(i.sigma(&(x * y)).unwrap().value(), (u * v % 23) as u64);
            }
        }
        assert_eq!(
            i.lift(FpElem::new(3, 7)),
            Err(IdealError::BadResidue { value: 3, p: 23 })
        );
    }

    #[test]
    fn generators_lie_in_kernel_for_half_rings() {
        for d in [-3i64, -7, -11, -15] {
            let r = ring(d);
            for (p, _) in usable_primes(&r, 100) {
                let i = PrimeIdeal::above(&r, p).unwrap();
                let (g0, g1) = i.generators();
                assert_eq!(i.sigma(&g0).unwrap().value(), 0);
                assert_eq!(i.sigma(&g1).unwrap().value(), 0, "d={d} p={p}");
                for g in i.z_basis() {
                    assert!(i.contains(&g));
                }
            }
        }
    }
}
