//! Exact closest-vector search in two-dimensional real lattices.
//!
//! Every coordinate of a lattice over an imaginary quadratic ring lives in a
//! rank-2 lattice inside the complex plane, so the decoders only ever need a
//! planar closest-vector routine. The search walks the rows parallel to the
//! first basis vector outward from the Babai row and stops once a row is
//! provably farther than the incumbent, which makes it exact for any basis.

use num_complex::Complex64;

/// Relative tolerance used to decide that two squared distances are tied.
pub const TIE_TOL: f64 = 1e-9;

/// True when `a` and `b` are equal up to [`TIE_TOL`].
#[inline]
pub fn same_dist(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= TIE_TOL * (1.0 + a.abs().max(b.abs()))
}

#[derive(Debug, Clone, Copy)]
pub struct PlaneBasis {
    b1: Complex64,
    b2: Complex64,
    b1_norm2: f64,
    /// Gram-Schmidt coefficient of `b2` along `b1`.
    mu: f64,
    /// Length of the component of `b2` orthogonal to `b1`.
    height: f64,
    /// Unit vector orthogonal to `b1`, oriented towards `b2`.
    perp: Complex64,
}

fn dot(x: Complex64, y: Complex64) -> f64 {
    x.re * y.re + x.im * y.im
}

impl PlaneBasis {
    /// Panics if the two vectors are linearly dependent.
    pub fn new(b1: Complex64, b2: Complex64) -> Self {
        let b1_norm2 = b1.norm_sqr();
        assert!(b1_norm2 > 0.0, "degenerate planar basis");
        let mu = dot(b2, b1) / b1_norm2;
        let star = b2 - b1 * mu;
        let height = star.norm();
        assert!(height > 1e-12 * b1_norm2.sqrt(), "degenerate planar basis");
        PlaneBasis {
            b1,
            b2,
            b1_norm2,
            mu,
            height,
            perp: star / height,
        }
    }

    pub fn point(&self, i: i64, j: i64) -> Complex64 {
        self.b1 * i as f64 + self.b2 * j as f64
    }

    /// Area of the fundamental parallelogram.
    pub fn covolume(&self) -> f64 {
        self.b1_norm2.sqrt() * self.height
    }

    /// All coefficient pairs `(i, j)` whose point `i*b1 + j*b2` is at minimum
    /// distance from `t`, together with that squared distance. Ties are
    /// detected with [`same_dist`]; the list is never empty.
    pub fn closest_all(&self, t: Complex64) -> (f64, Vec<(i64, i64)>) {
        let t_perp = dot(t, self.perp);
        let row0 = (t_perp / self.height).round() as i64;
        let mut best = f64::INFINITY;
        let mut found: Vec<(i64, i64, f64)> = Vec::with_capacity(4);

        let scan_row = |j: i64, best: &mut f64, found: &mut Vec<(i64, i64, f64)>| {
            let r = t - self.b2 * j as f64;
            let along = dot(r, self.b1) / self.b1_norm2;
            let i0 = along.round() as i64;
            for i in (i0 - 1)..=(i0 + 1) {
                let dist = (r - self.b1 * i as f64).norm_sqr();
                if dist < *best && !same_dist(dist, *best) {
                    *best = dist;
                }
                if same_dist(dist, *best) || dist <= *best {
                    found.push((i, j, dist));
                }
            }
        };

        scan_row(row0, &mut best, &mut found);
        let mut step = 1i64;
        loop {
            let mut any = false;
            for j in [row0 - step, row0 + step] {
                let gap = t_perp - j as f64 * self.height;
                let gap2 = gap * gap;
                if gap2 <= best || same_dist(gap2, best) {
                    any = true;
                    scan_row(j, &mut best, &mut found);
                }
            }
            if !any {
                break;
            }
            step += 1;
        }

        let keep: Vec<(i64, i64)> = found
            .into_iter()
            .filter(|&(_, _, dist)| same_dist(dist, best))
            .map(|(i, j, _)| (i, j))
            .collect();
        let mut keep = keep;
        keep.sort_unstable();
        keep.dedup();
        (best, keep)
    }

    /// Coefficients `(i, j)` of every lattice point within squared distance
    /// `radius2` of `center`, in row-major order.
    pub fn points_within(&self, center: Complex64, radius2: f64) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        if radius2 < 0.0 {
            return out;
        }
        let radius = radius2.sqrt();
        let c_perp = dot(center, self.perp);
        let slack = TIE_TOL * (1.0 + radius2);
        let j_lo = ((c_perp - radius) / self.height).floor() as i64;
        let j_hi = ((c_perp + radius) / self.height).ceil() as i64;
        let b1_len = self.b1_norm2.sqrt();
        for j in j_lo..=j_hi {
            let gap = c_perp - j as f64 * self.height;
            let rem = radius2 - gap * gap;
            if rem < -slack {
                continue;
            }
            let half = rem.max(0.0).sqrt() / b1_len;
            let r = center - self.b2 * j as f64;
            let along = dot(r, self.b1) / self.b1_norm2;
            let i_lo = (along - half).floor() as i64;
            let i_hi = (along + half).ceil() as i64;
            for i in i_lo..=i_hi {
                if (r - self.b1 * i as f64).norm_sqr() <= radius2 + slack {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(basis: &PlaneBasis, t: Complex64, box_half: i64) -> f64 {
        let mut best = f64::INFINITY;
        for i in -box_half..=box_half {
            for j in -box_half..=box_half {
                best = best.min((t - basis.point(i, j)).norm_sqr());
            }
        }
        best
    }

    #[test]
    fn skewed_basis_matches_brute_force() {
        // deliberately unreduced basis
        let basis = PlaneBasis::new(Complex64::new(1.0, 0.0), Complex64::new(3.3, 0.7));
        let mut state = 12345u64;
        for _ in 0..500 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let x = ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 6.0;
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let y = ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 6.0;
            let t = Complex64::new(x, y);
            let (d, pts) = basis.closest_all(t);
            assert!(!pts.is_empty());
            assert!(same_dist(d, brute(&basis, t, 40)), "t={t}");
        }
    }

    #[test]
    fn ties_are_all_reported() {
        let basis = PlaneBasis::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        let (d, pts) = basis.closest_all(Complex64::new(0.5, 0.5));
        assert!(same_dist(d, 0.5));
        assert_eq!(pts, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn disk_enumeration_counts_gaussian_points() {
        let basis = PlaneBasis::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        assert_eq!(basis.points_within(Complex64::new(0.0, 0.0), 1.0).len(), 5);
        assert_eq!(basis.points_within(Complex64::new(0.0, 0.0), 2.25).len(), 9);
    }
}
