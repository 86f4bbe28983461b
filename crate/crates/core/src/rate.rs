//! Computation rates and coefficient selection.
//!
//! For a relay observing `y = Σ h_k x_k + z` with power `P` the rate of the
//! combination `a` is
//!
//! ```text
//! R(h, a) = log₂⁺ (‖a‖² − P|hᴴa|² / (1 + P‖h‖²))⁻¹
//!         = log₂⁺ (1 + P‖h‖²) / f(a),    f(a) = ‖a‖² + P Σ_{i<j} |a_i h_j − a_j h_i|²
//! ```
//!
//! `f(a) = aᴴ Q a` with `Q = (1 + P‖h‖²) I − P h hᴴ` positive definite, so the
//! best coefficients are short vectors of a quadratic form over `O_K^K`.
//! They are found by pruned depth-first enumeration on the `LDLᴴ`
//! factorization of `Q`.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ideal::PrimeIdeal;
use crate::plane::same_dist;
use crate::ring::{QuadInt, Ring};

/// Largest number of users handled by the exact search.
pub const MAX_USERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("coefficient vector is zero")]
    ZeroCoefficients,
    #[error("channel vector is empty")]
    EmptyChannel,
    #[error("power must be positive and finite, got {0}")]
    BadPower(f64),
    #[error("channel entries must be finite")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient ring Z[ξ] with d = {got} does not match d = {expected}")]
    RingMismatch { expected: i64, got: i64 },
    #[error("{users} users exceed the exact-search limit of {max}")]
    TooManyUsers { users: usize, max: usize },
    #[error("expected {users} relays for {users} users, got {relays}")]
    NotSquare { users: usize, relays: usize },
    #[error(
        "degenerate channel: no full-rank coefficient matrix over {ring} among the candidates"
    )]
    Degenerate { ring: Ring },
    #[error("no rings given")]
    NoRings,
    #[error("integer overflow in determinant")]
    Overflow,
}

/// One relay's channel `h` together with the transmit power `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVector {
    h: Vec<Complex64>,
    power: f64,
}

impl ChannelVector {
    pub fn new(h: Vec<Complex64>, power: f64) -> Result<ChannelVector, RateError> {
        if h.is_empty() {
            return Err(RateError::EmptyChannel);
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(RateError::BadPower(power));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(RateError::NonFinite);
        }
        Ok(ChannelVector { h, power })
    }

    pub fn h(&self) -> &[Complex64] {
        &self.h
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }

    pub fn norm2(&self) -> f64 {
        self.h.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `1 + P‖h‖²`, the numerator of the rate.
    pub fn budget(&self) -> f64 {
        1.0 + self.power * self.norm2()
    }

    pub fn with_power(&self, power: f64) -> Result<ChannelVector, RateError> {
        ChannelVector::new(self.h.clone(), power)
    }

    /// `f(a) = ‖a‖² + P Σ_{i<j} |a_i h_j − a_j h_i|²` for embedded `a`.
    pub fn form(&self, a: &[Complex64]) -> f64 {
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let mut cross = 0.0;
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                cross += (a[i] * self.h[j] - a[j] * self.h[i]).norm_sqr();
            }
        }
        norm + self.power * cross
    }

    /// MMSE scaling `α = P hᴴa / (1 + P‖h‖²)`.
    pub fn mmse_alpha(&self, a: &[Complex64]) -> Complex64 {
        let hha: Complex64 = self.h.iter().zip(a).map(|(h, a)| h.conj() * a).sum();
        hha * self.power / self.budget()
    }
}

fn check_coeffs(ch: &ChannelVector, a: &[QuadInt]) -> Result<(), RateError> {
    if a.len() != ch.users() {
        return Err(RateError::DimensionMismatch {
            expected: ch.users(),
            got: a.len(),
        });
    }
    if let Some(first) = a.first() {
        let d = first.ring().d();
        if let Some(bad) = a.iter().find(|q| q.ring().d() != d) {
            return Err(RateError::RingMismatch {
                expected: d,
                got: bad.ring().d(),
            });
        }
    }
    if a.iter().all(QuadInt::is_zero) {
        return Err(RateError::ZeroCoefficients);
    }
    Ok(())
}

fn embed_all(a: &[QuadInt]) -> Vec<Complex64> {
    a.iter().map(QuadInt::embed).collect()
}

fn rate_from_form(budget: f64, f: f64) -> f64 {
    (budget / f).log2().max(0.0)
}

/// Computation rate of the combination `a` in bits per complex channel use.
pub fn computation_rate(ch: &ChannelVector, a: &[QuadInt]) -> Result<f64, RateError> {
    check_coeffs(ch, a)?;
    let f = ch.form(&embed_all(a));
    assert!(f > 0.0, "rate denominator must be positive for nonzero a");
    Ok(rate_from_form(ch.budget(), f))
}

/// Same as [`computation_rate`] for arbitrary complex coefficients.
pub fn computation_rate_complex(ch: &ChannelVector, a: &[Complex64]) -> Result<f64, RateError> {
    if a.len() != ch.users() {
        return Err(RateError::DimensionMismatch {
            expected: ch.users(),
            got: a.len(),
        });
    }
    let f = ch.form(a);
    if f <= 0.0 {
        return Err(RateError::ZeroCoefficients);
    }
    Ok(rate_from_form(ch.budget(), f))
}

/// A coefficient vector with its rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub a: Vec<QuadInt>,
    pub rate: f64,
    /// `f(a)`; smaller is better.
    pub form: f64,
    /// `‖a‖²`, exact.
    pub norm2: u64,
}

impl CoeffVector {
    fn new(ch: &ChannelVector, a: Vec<QuadInt>) -> CoeffVector {
        let form = ch.form(&embed_all(&a));
        let norm2 = a.iter().map(QuadInt::norm).sum();
        CoeffVector {
            rate: rate_from_form(ch.budget(), form),
            a,
            form,
            norm2,
        }
    }

    /// Ranking order: larger rate, then smaller `‖a‖²`, then the
    /// lexicographically greatest coordinates.
    pub fn rank_cmp(&self, other: &CoeffVector) -> Ordering {
        let by_form = if same_dist(self.form, other.form) {
            Ordering::Equal
        } else {
            self.form.total_cmp(&other.form)
        };
        by_form
            .then(self.norm2.cmp(&other.norm2))
            .then_with(|| crate::ring::lex_cmp_slices(&other.a, &self.a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Bound on `|a|` and `|b|` for every coordinate `a + bξ`.
    pub coord_cap: i64,
    /// Number of ranked candidates kept per relay.
    pub list_len: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            coord_cap: 12,
            list_len: 16,
        }
    }
}

/// Outcome of the per-relay coefficient search.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSearch {
    /// Up to `list_len` vectors of positive rate, best first, one per
    /// orbit under multiplication by units.
    pub candidates: Vec<CoeffVector>,
    /// The coordinate cap excluded part of the search region.
    pub capped: bool,
}

impl CoeffSearch {
    /// The best vector, or the best standard basis vector when no vector
    /// has positive rate.
    pub fn best(&self, ch: &ChannelVector, ring: &Ring) -> CoeffVector {
        match self.candidates.first() {
            Some(c) => c.clone(),
            None => basis_vectors(ch, ring)
                .into_iter()
                .min_by(CoeffVector::rank_cmp)
                .expect("at least one user"),
        }
    }
}

fn basis_vectors(ch: &ChannelVector, ring: &Ring) -> Vec<CoeffVector> {
    let k = ch.users();
    (0..k)
        .map(|i| {
            let mut a = vec![ring.zero(); k];
            a[i] = ring.one();
            CoeffVector::new(ch, a)
        })
        .collect()
}

/// `Q = L D Lᴴ` with `L` unit lower triangular.
fn ldl(ch: &ChannelVector) -> (Vec<Vec<Complex64>>, Vec<f64>) {
    let k = ch.users();
    let b = ch.budget();
    let p = ch.power();
    let h = ch.h();
    let q = |i: usize, j: usize| -> Complex64 {
        let diag = if i == j { b } else { 0.0 };
        Complex64::new(diag, 0.0) - h[i] * h[j].conj() * p
    };
    let mut l = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    let mut d = vec![0.0; k];
    for j in 0..k {
        let mut dj = q(j, j).re;
        for m in 0..j {
            dj -= l[j][m].norm_sqr() * d[m];
        }
        d[j] = dj;
        l[j][j] = Complex64::new(1.0, 0.0);
        for i in j + 1..k {
            let mut v = q(i, j);
            for m in 0..j {
                v -= l[i][m] * l[j][m].conj() * d[m];
            }
            l[i][j] = v / dj;
        }
    }
    (l, d)
}

/// Squared distance from `center` to the nearest point `a + bξ` with
/// `max(|a|, |b|) > cap`, bounded below by the distance to the boundary of
/// the parallelogram `|x|, |y| < cap + 1` in the `{1, ξ}` basis.
fn box_clearance(ring: &Ring, center: Complex64, cap: i64) -> f64 {
    let xi = ring.xi();
    let y = center.im / xi.im;
    let x = center.re - y * xi.re;
    let edge = cap as f64 + 1.0;
    let gap = ((edge - y.abs()) * xi.im).min((edge - x.abs()) * xi.im / xi.norm());
    gap.max(0.0).powi(2)
}

struct Enumerator<'a> {
    ch: &'a ChannelVector,
    ring: Ring,
    units: Vec<QuadInt>,
    l: Vec<Vec<Complex64>>,
    d: Vec<f64>,
    opts: SearchOptions,
    budget: f64,
    current: Vec<QuadInt>,
    kept: Vec<CoeffVector>,
    /// Lower bound on the form of any vector cut off by the coordinate cap.
    excluded: f64,
}

impl Enumerator<'_> {
    fn threshold(&self) -> f64 {
        if self.kept.len() < self.opts.list_len {
            self.budget
        } else {
            self.kept.last().map_or(self.budget, |c| c.form)
        }
    }

    fn descend(&mut self, level: usize, partial: f64) {
        let k = self.current.len();
        let mut center = Complex64::new(0.0, 0.0);
        for j in level + 1..k {
            center -= self.l[j][level].conj() * self.current[j].embed();
        }
        let thr = self.threshold();
        let slack = 1e-9 * (1.0 + thr);
        let room = thr - partial + slack;
        if room <= 0.0 {
            return;
        }
        let (mut pts, outside) =
            self.ring
                .points_in_disk_capped(center, room / self.d[level], self.opts.coord_cap);
        if outside {
            let lb =
                partial + self.d[level] * box_clearance(&self.ring, center, self.opts.coord_cap);
            self.excluded = self.excluded.min(lb);
        }
        pts.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| x.0.lex_cmp(&y.0)));
        for (q, dist2) in pts {
            let next = partial + self.d[level] * dist2;
            // the threshold only shrinks, so recheck against the live value
            if next > self.threshold() + slack {
                break;
            }
            self.current[level] = q;
            if level == 0 {
                self.leaf();
            } else {
                self.descend(level - 1, next);
            }
        }
        self.current[level] = self.ring.zero();
    }

    fn leaf(&mut self) {
        if self.current.iter().all(QuadInt::is_zero) {
            return;
        }
        // one representative per unit orbit: the lexicographically greatest
        for u in &self.units[1..] {
            let moved: Vec<QuadInt> = self.current.iter().map(|&x| *u * x).collect();
            if crate::ring::lex_cmp_slices(&moved, &self.current) == Ordering::Greater {
                return;
            }
        }
        let cand = CoeffVector::new(self.ch, self.current.clone());
        if !(cand.form < self.budget) || same_dist(cand.form, self.budget) {
            return;
        }
        let pos = self
            .kept
            .partition_point(|c| c.rank_cmp(&cand) != Ordering::Greater);
        if pos >= self.opts.list_len {
            return;
        }
        self.kept.insert(pos, cand);
        self.kept.truncate(self.opts.list_len);
    }
}

/// Ranked list of the best coefficient vectors over `ring`.
pub fn best_coefficients(
    ch: &ChannelVector,
    ring: &Ring,
    opts: SearchOptions,
) -> Result<CoeffSearch, RateError> {
    let k = ch.users();
    if k > MAX_USERS {
        return Err(RateError::TooManyUsers {
            users: k,
            max: MAX_USERS,
        });
    }
    let (l, d) = ldl(ch);
    let mut units = ring.units();
    units.sort_by(|x, y| (*x != ring.one()).cmp(&(*y != ring.one())));
    let mut e = Enumerator {
        ch,
        ring: *ring,
        units,
        l,
        d,
        opts: SearchOptions {
            list_len: opts.list_len.max(1),
            ..opts
        },
        budget: ch.budget(),
        current: vec![ring.zero(); k],
        kept: Vec::new(),
        excluded: f64::INFINITY,
    };
    e.descend(k - 1, 0.0);
    // flagged only if a cut-off vector could beat the top candidate
    let top = e.kept.first().map_or(e.budget, |c| c.form);
    let capped = e.excluded < top * (1.0 + 1e-9);
    if capped {
        log::debug!(
            "coordinate cap {} binds over {ring}: result is best within cap",
            opts.coord_cap
        );
    }
    Ok(CoeffSearch {
        candidates: e.kept,
        capped,
    })
}

/// Exact determinant over `O_K` by cofactor expansion.
pub fn determinant(rows: &[Vec<QuadInt>]) -> Result<QuadInt, RateError> {
    let n = rows.len();
    let ring = rows[0][0].ring();
    if n == 1 {
        return Ok(rows[0][0]);
    }
    let mut acc = ring.zero();
    for (col, &entry) in rows[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<QuadInt>> = rows[1..]
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != col)
                    .map(|(_, &x)| x)
                    .collect()
            })
            .collect();
        let term = entry
            .checked_mul(&determinant(&minor)?)
            .map_err(|_| RateError::Overflow)?;
        acc = if col % 2 == 0 {
            acc.checked_add(&term)
        } else {
            acc.checked_sub(&term)
        }
        .map_err(|_| RateError::Overflow)?;
    }
    Ok(acc)
}

/// Coefficient matrix chosen for all relays over one ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub ring: Ring,
    /// Row `m` holds relay `m`'s coefficients.
    pub rows: Vec<CoeffVector>,
    /// Minimum rate over relays.
    pub network_rate: f64,
    pub capped: bool,
}

impl Selection {
    pub fn matrix(&self) -> Vec<Vec<QuadInt>> {
        self.rows.iter().map(|r| r.a.clone()).collect()
    }

    pub fn determinant(&self) -> Result<QuadInt, RateError> {
        determinant(&self.matrix())
    }
}

struct Backtrack<'a> {
    lists: &'a [Vec<CoeffVector>],
    ideal: Option<&'a PrimeIdeal>,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Backtrack<'_> {
    fn run(&mut self, relay: usize, min_rate: f64) -> Result<(), RateError> {
        if relay == self.lists.len() {
            let rows: Vec<Vec<QuadInt>> = self
                .chosen
                .iter()
                .enumerate()
                .map(|(m, &i)| self.lists[m][i].a.clone())
                .collect();
            let det = determinant(&rows)?;
            let ok = !det.is_zero()
                && self
                    .ideal
                    .is_none_or(|id| id.sigma_raw(det.a, det.b).value() != 0);
            if ok {
                self.best = Some((min_rate, self.chosen.clone()));
            }
            return Ok(());
        }
        for i in 0..self.lists[relay].len() {
            let r = self.lists[relay][i].rate.min(min_rate);
            if let Some((b, _)) = &self.best {
                // lists are sorted, so no later candidate can do better
                if r <= *b {
                    break;
                }
            }
            self.chosen.push(i);
            self.run(relay + 1, r)?;
            self.chosen.pop();
        }
        Ok(())
    }
}

/// Full-rank coefficient matrix maximizing the minimum rate over relays.
///
/// Each relay ranks its candidates; standard basis vectors are appended so
/// that a full-rank choice always exists. With `ideal` given, `σ(A)` must
/// also be invertible modulo `p`.
pub fn select_matrix(
    relays: &[ChannelVector],
    ring: &Ring,
    opts: SearchOptions,
    ideal: Option<&PrimeIdeal>,
) -> Result<Selection, RateError> {
    let k = relays.first().ok_or(RateError::EmptyChannel)?.users();
    if relays.len() != k {
        return Err(RateError::NotSquare {
            users: k,
            relays: relays.len(),
        });
    }
    if let Some(bad) = relays.iter().find(|ch| ch.users() != k) {
        return Err(RateError::DimensionMismatch {
            expected: k,
            got: bad.users(),
        });
    }
    let mut capped = false;
    let mut lists = Vec::with_capacity(k);
    for ch in relays {
        let search = best_coefficients(ch, ring, opts)?;
        capped |= search.capped;
        let mut list = search.candidates;
        for e in basis_vectors(ch, ring) {
            if !list.iter().any(|c| c.a == e.a) {
                list.push(e);
            }
        }
        list.sort_by(CoeffVector::rank_cmp);
        lists.push(list);
    }
    let mut bt = Backtrack {
        lists: &lists,
        ideal,
        chosen: Vec::with_capacity(k),
        best: None,
    };
    bt.run(0, f64::INFINITY)?;
    let (network_rate, chosen) = bt.best.ok_or(RateError::Degenerate { ring: *ring })?;
    Ok(Selection {
        ring: *ring,
        rows: chosen
            .into_iter()
            .enumerate()
            .map(|(m, i)| lists[m][i].clone())
            .collect(),
        network_rate,
        capped,
    })
}

/// The selection with the largest network rate; earlier rings win ties.
pub fn best_selection(selections: &[Selection]) -> Option<&Selection> {
    selections
        .iter()
        .fold(None, |best: Option<&Selection>, s| match best {
            Some(b) if s.network_rate <= b.network_rate => Some(b),
            _ => Some(s),
        })
}

/// Adaptive ring choice: the best selection over all rings. Rings whose
/// selection fails are skipped.
pub fn adaptive_select(
    relays: &[ChannelVector],
    rings: &[Ring],
    opts: SearchOptions,
) -> Result<Selection, RateError> {
    if rings.is_empty() {
        return Err(RateError::NoRings);
    }
    let mut last_err = None;
    let mut ok = Vec::new();
    for ring in rings {
        match select_matrix(relays, ring, opts, None) {
            Ok(s) => ok.push(s),
            Err(e) => last_err = Some(e),
        }
    }
    match best_selection(&ok) {
        Some(s) => Ok(s.clone()),
        None => Err(last_err.expect("at least one ring was tried")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_user_rate() {
        let ring = Ring::new(-1).unwrap();
        let ch = ChannelVector::new(vec![c(1.0, 0.0)], 100.0).unwrap();
        let r = computation_rate(&ch, &[ring.one()]).unwrap();
        assert!((r - 101f64.log2()).abs() < 1e-12);
        assert!((r - 6.6582).abs() < 1e-4);
    }

    #[test]
    fn orthogonal_combination_has_zero_rate() {
        let ring = Ring::new(-1).unwrap();
        let ch = ChannelVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)], 50.0).unwrap();
        let r = computation_rate(&ch, &[ring.zero(), ring.one()]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let ring = Ring::new(-2).unwrap();
        let ch = ChannelVector::new(vec![c(1.0, 0.0), c(0.5, 0.0)], 10.0).unwrap();
        assert_eq!(
            computation_rate(&ch, &[ring.zero(), ring.zero()]),
            Err(RateError::ZeroCoefficients)
        );
        assert!(matches!(
            computation_rate(&ch, &[ring.one()]),
            Err(RateError::DimensionMismatch { .. })
        ));
        let other = Ring::new(-1).unwrap();
        assert!(matches!(
            computation_rate(&ch, &[ring.one(), other.one()]),
            Err(RateError::RingMismatch { .. })
        ));
        assert_eq!(
            ChannelVector::new(vec![], 1.0),
            Err(RateError::EmptyChannel)
        );
        assert_eq!(
            ChannelVector::new(vec![c(1.0, 0.0)], 0.0),
            Err(RateError::BadPower(0.0))
        );
    }

    #[test]
    fn form_matches_textbook_expression() {
        let ring = Ring::new(-7).unwrap();
        let ch = ChannelVector::new(vec![c(0.3, -1.1), c(0.8, 0.4), c(-0.2, 0.9)], 37.0).unwrap();
        let a = [ring.elem(1, 1), ring.elem(-2, 0), ring.elem(0, 1)];
        let e = embed_all(&a);
        let na: f64 = e.iter().map(|z| z.norm_sqr()).sum();
        let hha: Complex64 = ch.h().iter().zip(&e).map(|(h, a)| h.conj() * a).sum();
        let direct = na - ch.power() * hha.norm_sqr() / ch.budget();
        assert!((ch.form(&e) / ch.budget() - direct).abs() < 1e-10);
    }

    #[test]
    fn single_user_best_is_one() {
        for d in crate::ring::DEFAULT_RINGS {
            let ring = Ring::new(d).unwrap();
            let ch = ChannelVector::new(vec![c(1.0, 0.0)], 100.0).unwrap();
            let s = best_coefficients(&ch, &ring, SearchOptions::default()).unwrap();
            assert_eq!(s.best(&ch, &ring).a, vec![ring.one()]);
        }
    }

    #[test]
    fn low_power_picks_strongest_user() {
        let ring = Ring::new(-1).unwrap();
        let ch = ChannelVector::new(vec![c(0.3, 0.2), c(-0.9, 0.5), c(0.1, 0.0)], 1e-6).unwrap();
        let s = best_coefficients(&ch, &ring, SearchOptions::default()).unwrap();
        assert_eq!(
            s.best(&ch, &ring).a,
            vec![ring.zero(), ring.one(), ring.zero()]
        );
    }

    #[test]
    fn determinant_examples() {
        let ring = Ring::new(-6).unwrap();
        let s = ring.sqrt_d();
        let rows = vec![vec![ring.one(), s], vec![s, ring.one()]];
        assert_eq!(determinant(&rows).unwrap(), ring.elem(7, 0));
        let parallel = vec![vec![ring.one(), s], vec![s, s * s]];
        assert!(determinant(&parallel).unwrap().is_zero());
        let i3: Vec<Vec<QuadInt>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| if i == j { ring.one() } else { ring.zero() })
                    .collect()
            })
            .collect();
        assert_eq!(determinant(&i3).unwrap(), ring.one());
    }

    #[test]
    fn identity_channel_selects_identity() {
        for d in [-1, -3, -6] {
            let ring = Ring::new(d).unwrap();
            let p = 1000.0;
            let relays = vec![
                ChannelVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)], p).unwrap(),
                ChannelVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)], p).unwrap(),
            ];
            let s = select_matrix(&relays, &ring, SearchOptions::default(), None).unwrap();
            assert_eq!(
                s.matrix(),
                vec![vec![ring.one(), ring.zero()], vec![ring.zero(), ring.one()]]
            );
            assert!((s.network_rate - 1001f64.log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_channels_force_second_choice() {
        let ring = Ring::new(-1).unwrap();
        let h = vec![c(1.3, 0.2), c(0.7, -0.6)];
        let relays = vec![
            ChannelVector::new(h.clone(), 300.0).unwrap(),
            ChannelVector::new(h, 300.0).unwrap(),
        ];
        let s = select_matrix(&relays, &ring, SearchOptions::default(), None).unwrap();
        assert!(!s.determinant().unwrap().is_zero());
        let best = best_coefficients(&relays[0], &ring, SearchOptions::default()).unwrap();
        assert_eq!(s.rows[0].a, best.candidates[0].a);
        assert_ne!(s.rows[1].a, best.candidates[0].a);
        assert!(s.network_rate < best.candidates[0].rate);
    }

    #[test]
    fn residue_check_rejects_singular_mod_p() {
        let ring = Ring::new(-1).unwrap();
        let id = PrimeIdeal::above(&ring, 5).unwrap();
        // det = 5 lies in every ideal above 5
        let relays = vec![
            ChannelVector::new(vec![c(1.0, 0.0), c(2.0, 0.0)], 1e4).unwrap(),
            ChannelVector::new(vec![c(2.0, 0.0), c(-1.0, 0.0)], 1e4).unwrap(),
        ];
        let free = select_matrix(&relays, &ring, SearchOptions::default(), None).unwrap();
        let det = free.determinant().unwrap();
        assert!(id.contains(&det));
        let fixed = select_matrix(&relays, &ring, SearchOptions::default(), Some(&id)).unwrap();
        assert!(!id.contains(&fixed.determinant().unwrap()));
        assert!(fixed.network_rate <= free.network_rate);
    }
}
