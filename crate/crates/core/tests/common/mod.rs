//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use acf_core::ring::{QuadInt, Ring};
use num_complex::Complex64;

/// Echelon basis `{(α, β), (0, δ)}` of the Z-module spanned by `vs` in Z².
pub fn echelon(vs: &[(i64, i64)]) -> ((i64, i64), i64) {
    let mut piv = (0i64, 0i64);
    let mut delta = 0i64;
    for &v in vs {
        let mut v = v;
        let mut p = piv;
        while v.0 != 0 {
            let q = p.0 / v.0;
            p = (p.0 - q * v.0, p.1 - q * v.1);
            std::mem::swap(&mut p, &mut v);
        }
        piv = p;
        delta = gcd(delta, v.1);
    }
    if piv.0 < 0 {
        piv = (-piv.0, -piv.1);
    }
    (piv, delta)
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// The ideal `(p, g)` of `O_K` as a Z-module, from the span of
/// `p, pξ, g, gξ`.
pub struct IdealOracle {
    piv: (i64, i64),
    delta: i64,
}

impl IdealOracle {
    pub fn new(ring: &Ring, p: i64, g: QuadInt) -> IdealOracle {
        let xi = ring.elem(0, 1);
        let pe = ring.elem(p, 0);
        let gens: Vec<(i64, i64)> = [pe, pe * xi, g, g * xi]
            .iter()
            .map(QuadInt::coords)
            .collect();
        let (piv, delta) = echelon(&gens);
        IdealOracle { piv, delta }
    }

    pub fn contains(&self, x: &QuadInt) -> bool {
        let (a, b) = x.coords();
        let (alpha, beta) = self.piv;
        let rest = if alpha == 0 {
            if a != 0 {
                return false;
            }
            b
        } else {
            if a % alpha != 0 {
                return false;
            }
            b - (a / alpha) * beta
        };
        if self.delta == 0 {
            rest == 0
        } else {
            rest % self.delta == 0
        }
    }

    /// Index of the module in Z².
    pub fn index(&self) -> i64 {
        (self.piv.0 * self.delta).abs()
    }
}

/// `log₂⁺ (‖a‖² − P|hᴴa|²/(1 + P‖h‖²))⁻¹` evaluated as written.
pub fn textbook_rate(h: &[Complex64], a: &[Complex64], power: f64) -> f64 {
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nh: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let hha: Complex64 = h.iter().zip(a).map(|(h, a)| h.conj() * a).sum();
    let inner = na - power * hha.norm_sqr() / (1.0 + power * nh);
    (1.0 / inner).log2().max(0.0)
}

fn lex_greater(x: &[QuadInt], y: &[QuadInt]) -> bool {
    for (p, q) in x.iter().zip(y) {
        if p.coords() != q.coords() {
            return p.coords() > q.coords();
        }
    }
    false
}

/// Best coefficient vector for `K = 2` by scanning a coordinate box. Any
/// vector beating a standard basis vector has `‖a‖² ≤ min_k f(e_k)`, which
/// bounds the box. Ties: larger rate, smaller norm, lexicographically
/// greatest.
pub fn brute_best(ring: &Ring, h: &[Complex64], power: f64) -> (f64, Vec<QuadInt>) {
    let nh: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let f_basis = (0..h.len())
        .map(|k| 1.0 + power * (nh - h[k].norm_sqr()))
        .fold(f64::INFINITY, f64::min);
    let radius = f_basis.sqrt() + 1e-9;
    let im = ring.xi().im;
    let b_max = (radius / im).ceil() as i64 + 1;
    let a_max = (radius + b_max as f64 * ring.xi().re).ceil() as i64 + 1;
    let mut coords = Vec::new();
    for a in -a_max..=a_max {
        for b in -b_max..=b_max {
            let q = ring.elem(a, b);
            if q.embed().norm_sqr() <= f_basis + 1e-9 {
                coords.push(q);
            }
        }
    }
    let mut best: Option<(f64, u64, Vec<QuadInt>)> = None;
    for &x in &coords {
        for &y in &coords {
            if x.is_zero() && y.is_zero() {
                continue;
            }
            let a = vec![x, y];
            let e: Vec<Complex64> = a.iter().map(QuadInt::embed).collect();
            let rate = textbook_rate(h, &e, power);
            let norm = x.norm() + y.norm();
            let better = match &best {
                None => true,
                Some((br, bn, ba)) => {
                    let tol = 1e-9 * (1.0 + br.abs());
                    if rate > br + tol {
                        true
                    } else if rate < br - tol {
                        false
                    } else if norm != *bn {
                        norm < *bn
                    } else {
                        lex_greater(&a, ba)
                    }
                }
            };
            if better {
                best = Some((rate, norm, a));
            }
        }
    }
    let (r, _, a) = best.expect("box contains the basis vectors");
    (r, a)
}
