//! Rings of integers of imaginary quadratic fields.
//!
//! For a squarefree `d < 0` the ring of integers of `Q(√d)` is `Z[ξ]` with
//! `ξ = √d` when `d ≡ 2, 3 (mod 4)` and `ξ = (1 + √d)/2` when `d ≡ 1 (mod 4)`.
//! Elements are stored as exact integer coordinates `a + b·ξ`.
//!
//! Coordinates are `i64` and every ring operation is overflow checked. The
//! simulations in this crate keep coordinates well below `2^31`, so products
//! of two elements never come close to the `i64` range.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plane::{same_dist, PlaneBasis};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("d must be negative, got {0}")]
    NonNegative(i64),
    #[error("d = {d} is not squarefree ({factor}^2 divides it)")]
    NotSquarefree { d: i64, factor: i64 },
    #[error("operands belong to different rings (d = {0} and d = {1})")]
    Mismatch(i64, i64),
    #[error("integer overflow in ring arithmetic")]
    Overflow,
}

/// Which generator the ring uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiCase {
    /// `ξ = (1 + √d)/2`, used when `d ≡ 1 (mod 4)`.
    Half,
    /// `ξ = √d`, used when `d ≡ 2, 3 (mod 4)`.
    Whole,
}

/// The ring `Z[ξ]` of an imaginary quadratic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Ring {
    d: i64,
    xi: XiCase,
    discriminant: i64,
}

impl TryFrom<i64> for Ring {
    type Error = RingError;
    fn try_from(d: i64) -> Result<Self, RingError> {
        Ring::new(d)
    }
}

impl From<Ring> for i64 {
    fn from(r: Ring) -> i64 {
        r.d
    }
}

/// The rings used throughout the experiments.
pub const DEFAULT_RINGS: [i64; 6] = [-1, -2, -3, -5, -6, -7];

impl Ring {
    /// Builds the ring for a squarefree negative `d`.
    pub fn new(d: i64) -> Result<Ring, RingError> {
        if d >= 0 {
            return Err(RingError::NonNegative(d));
        }
        let m = d.unsigned_abs();
        let mut f = 2u64;
        while f * f <= m {
            if m % (f * f) == 0 {
                return Err(RingError::NotSquarefree {
                    d,
                    factor: f as i64,
                });
            }
            f += 1;
        }
        let xi = if d.rem_euclid(4) == 1 {
            XiCase::Half
        } else {
            XiCase::Whole
        };
        let discriminant = match xi {
            XiCase::Half => d,
            XiCase::Whole => 4 * d,
        };
        Ok(Ring {
            d,
            xi,
            discriminant,
        })
    }

    pub fn defaults() -> Vec<Ring> {
        DEFAULT_RINGS
            .iter()
            .map(|&d| Ring::new(d).expect("default rings are squarefree"))
            .collect()
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn xi_case(&self) -> XiCase {
        self.xi
    }

    pub fn discriminant(&self) -> i64 {
        self.discriminant
    }

    /// `ξ²` expressed as `(c0, c1)` meaning `c0 + c1·ξ`.
    fn xi_squared(&self) -> (i64, i64) {
        match self.xi {
            XiCase::Whole => (self.d, 0),
            XiCase::Half => ((self.d - 1) / 4, 1),
        }
    }

    /// The complex embedding of `ξ` with positive imaginary part.
    pub fn xi(&self) -> Complex64 {
        let root = (self.d.unsigned_abs() as f64).sqrt();
        match self.xi {
            XiCase::Whole => Complex64::new(0.0, root),
            XiCase::Half => Complex64::new(0.5, root / 2.0),
        }
    }

    /// Area of the fundamental parallelogram spanned by `1` and `ξ`,
    /// equal to `√|Δ_K| / 2`.
    pub fn covolume(&self) -> f64 {
        (self.discriminant.unsigned_abs() as f64).sqrt() / 2.0
    }

    pub fn elem(&self, a: i64, b: i64) -> QuadInt {
        QuadInt { a, b, ring: *self }
    }

    pub fn zero(&self) -> QuadInt {
        self.elem(0, 0)
    }

    pub fn one(&self) -> QuadInt {
        self.elem(1, 0)
    }

    /// `√d` written in the `{1, ξ}` basis.
    pub fn sqrt_d(&self) -> QuadInt {
        match self.xi {
            XiCase::Whole => self.elem(0, 1),
            XiCase::Half => self.elem(-1, 2),
        }
    }

    /// The unit group: `±1`, plus `±i` for `d = -1` and the sixth roots of
    /// unity for `d = -3`.
    pub fn units(&self) -> Vec<QuadInt> {
        match self.d {
            -1 => vec![
                self.elem(1, 0),
                self.elem(0, 1),
                self.elem(-1, 0),
                self.elem(0, -1),
            ],
            -3 => vec![
                self.elem(1, 0),
                self.elem(0, 1),
                self.elem(-1, 1),
                self.elem(-1, 0),
                self.elem(0, -1),
                self.elem(1, -1),
            ],
            _ => vec![self.elem(1, 0), self.elem(-1, 0)],
        }
    }

    fn plane(&self) -> PlaneBasis {
        PlaneBasis::new(Complex64::new(1.0, 0.0), self.xi())
    }

    /// Nearest ring element to `z`; ties go to the lexicographically
    /// smallest `(a, b)`.
    pub fn quantize(&self, z: Complex64) -> QuadInt {
        let (_, mut pts) = self.plane().closest_all(z);
        pts.sort_unstable();
        let (a, b) = pts[0];
        self.elem(a, b)
    }

    /// Every ring element within squared distance `radius2` of `center`,
    /// with its squared distance.
    pub fn points_in_disk(&self, center: Complex64, radius2: f64) -> Vec<(QuadInt, f64)> {
        self.plane()
            .points_within(center, radius2)
            .into_iter()
            .map(|(a, b)| {
                let q = self.elem(a, b);
                let dist = (center - q.embed()).norm_sqr();
                (q, dist)
            })
            .collect()
    }

    /// [`Ring::points_in_disk`] restricted to `|a|, |b| ≤ cap`, in row
    /// order. The flag is set when the disk holds points outside the box.
    pub fn points_in_disk_capped(
        &self,
        center: Complex64,
        radius2: f64,
        cap: i64,
    ) -> (Vec<(QuadInt, f64)>, bool) {
        let mut out = Vec::new();
        if radius2 < 0.0 {
            return (out, false);
        }
        let r = radius2.sqrt();
        let slack = crate::plane::TIE_TOL * (1.0 + radius2);
        let xi = self.xi();
        let b_lo = ((center.im - r) / xi.im).floor() as i64;
        let b_hi = ((center.im + r) / xi.im).ceil() as i64;
        let mut outside = b_lo < -cap - 1 || b_hi > cap + 1;
        for b in b_lo.max(-cap - 1)..=b_hi.min(cap + 1) {
            let dy = b as f64 * xi.im - center.im;
            let rem = radius2 - dy * dy;
            if rem < -slack {
                continue;
            }
            let dx = rem.max(0.0).sqrt();
            let shift = b as f64 * xi.re;
            let a_lo = (center.re - dx - shift).floor() as i64;
            let a_hi = (center.re + dx - shift).ceil() as i64;
            if a_lo < -cap - 1 || a_hi > cap + 1 {
                // the chord reaches past the neighbouring column
                outside = true;
            }
            for a in a_lo.max(-cap - 1)..=a_hi.min(cap + 1) {
                let q = self.elem(a, b);
                let dist = (center - q.embed()).norm_sqr();
                if dist > radius2 + slack {
                    continue;
                }
                if a.abs() > cap || b.abs() > cap {
                    outside = true;
                    continue;
                }
                out.push((q, dist));
            }
        }
        (out, outside)
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.xi {
            XiCase::Whole => write!(f, "Z[√{}]", self.d),
            XiCase::Half => write!(f, "Z[(1+√{})/2]", self.d),
        }
    }
}

/// An element `a + b·ξ` of a [`Ring`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadInt {
    pub a: i64,
    pub b: i64,
    ring: Ring,
}

impl QuadInt {
    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn coords(&self) -> (i64, i64) {
        (self.a, self.b)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    fn same_ring(&self, other: &QuadInt) -> Result<(), RingError> {
        if self.ring != other.ring {
            Err(RingError::Mismatch(self.ring.d, other.ring.d))
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, other: &QuadInt) -> Result<QuadInt, RingError> {
        self.same_ring(other)?;
        let a = self.a.checked_add(other.a).ok_or(RingError::Overflow)?;
        let b = self.b.checked_add(other.b).ok_or(RingError::Overflow)?;
        Ok(self.ring.elem(a, b))
    }

    pub fn checked_sub(&self, other: &QuadInt) -> Result<QuadInt, RingError> {
        self.same_ring(other)?;
        let a = self.a.checked_sub(other.a).ok_or(RingError::Overflow)?;
        let b = self.b.checked_sub(other.b).ok_or(RingError::Overflow)?;
        Ok(self.ring.elem(a, b))
    }

    /// `(a1 + b1ξ)(a2 + b2ξ) = a1a2 + (a1b2 + a2b1)ξ + b1b2ξ²`, with `ξ²`
    /// rewritten in the `{1, ξ}` basis.
    pub fn checked_mul(&self, other: &QuadInt) -> Result<QuadInt, RingError> {
        self.same_ring(other)?;
        let (s0, s1) = self.ring.xi_squared();
        let wide = |x: i64| x as i128;
        let bb = wide(self.b) * wide(other.b);
        let a = wide(self.a) * wide(other.a) + bb * wide(s0);
        let b = wide(self.a) * wide(other.b) + wide(other.a) * wide(self.b) + bb * wide(s1);
        let a = i64::try_from(a).map_err(|_| RingError::Overflow)?;
        let b = i64::try_from(b).map_err(|_| RingError::Overflow)?;
        Ok(self.ring.elem(a, b))
    }

    /// Galois conjugate. For `ξ = (1+√d)/2` the conjugate of `ξ` is `1 - ξ`.
    pub fn conj(&self) -> QuadInt {
        match self.ring.xi {
            XiCase::Whole => self.ring.elem(self.a, -self.b),
            XiCase::Half => self.ring.elem(self.a + self.b, -self.b),
        }
    }

    /// Field norm `x·conj(x)`, which equals `|embed(x)|²`.
    pub fn norm(&self) -> u64 {
        let a = self.a as i128;
        let b = self.b as i128;
        let d = self.ring.d as i128;
        let n = match self.ring.xi {
            XiCase::Whole => a * a - d * b * b,
            XiCase::Half => a * a + a * b + b * b * (1 - d) / 4,
        };
        u64::try_from(n).expect("norm of an imaginary quadratic integer is nonnegative")
    }

    pub fn embed(&self) -> Complex64 {
        Complex64::new(self.a as f64, 0.0) + self.ring.xi() * self.b as f64
    }

    /// Lexicographic order on `(a, b)`.
    pub fn lex_cmp(&self, other: &QuadInt) -> Ordering {
        (self.a, self.b).cmp(&(other.a, other.b))
    }
}

impl Add for QuadInt {
    type Output = QuadInt;
    /// Panics on ring mismatch or overflow; see [`QuadInt::checked_add`].
    fn add(self, rhs: QuadInt) -> QuadInt {
        self.checked_add(&rhs).expect("quadratic integer addition")
    }
}

impl Sub for QuadInt {
    type Output = QuadInt;
    fn sub(self, rhs: QuadInt) -> QuadInt {
        self.checked_sub(&rhs)
            .expect("quadratic integer subtraction")
    }
}

impl Mul for QuadInt {
    type Output = QuadInt;
    fn mul(self, rhs: QuadInt) -> QuadInt {
        self.checked_mul(&rhs)
            .expect("quadratic integer multiplication")
    }
}

impl Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        self.ring.elem(-self.a, -self.b)
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gen = match self.ring.xi {
            XiCase::Whole => format!("√{}", self.ring.d),
            XiCase::Half => "ξ".to_string(),
        };
        let coef = |b: i64| match b.abs() {
            1 => gen.clone(),
            n => format!("{n}{gen}"),
        };
        match (self.a, self.b) {
            (a, 0) => write!(f, "{a}"),
            (0, b) if b < 0 => write!(f, "-{}", coef(b)),
            (0, b) => write!(f, "{}", coef(b)),
            (a, b) if b < 0 => write!(f, "{a}-{}", coef(b)),
            (a, b) => write!(f, "{a}+{}", coef(b)),
        }
    }
}

/// Ordering used when equal-distance candidates have to be resolved:
/// elementwise lexicographic on the coordinate pairs.
pub fn lex_cmp_slices(x: &[QuadInt], y: &[QuadInt]) -> Ordering {
    for (p, q) in x.iter().zip(y) {
        match p.lex_cmp(q) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    x.len().cmp(&y.len())
}

/// True when `candidate` is strictly closer than `incumbent`, or tied and
/// lexicographically smaller.
pub(crate) fn better_lex_smallest(
    cand_dist: f64,
    cand: &[QuadInt],
    best_dist: f64,
    best: &[QuadInt],
) -> bool {
    if same_dist(cand_dist, best_dist) {
        lex_cmp_slices(cand, best) == Ordering::Less
    } else {
        cand_dist < best_dist
    }
}
