//! Construction A lattices over `O_K` and nested lattice codes built from
//! them.
//!
//! A linear code `C ⊆ F_p^N` and a prime ideal `𝔭` of norm `p` give the
//! lattice `Λ = M(C) + 𝔭^N`, where `M` lifts residues to the rational
//! integers `0..p`. A vector of ring elements lies in `Λ` exactly when its
//! coordinate-wise reduction `σ` is a codeword. Lattices are stored
//! unscaled; the physical lattice is `scale · Λ` with `scale = γ/√p`.

use std::cmp::Ordering;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::FpMatrix;
use crate::ideal::{IdealError, PrimeIdeal};
use crate::plane::{same_dist, PlaneBasis};
use crate::ring::{better_lex_smallest, lex_cmp_slices, QuadInt, Ring};
use crate::rng::{self, mean_stderr};

/// Longest block the exact decoder accepts.
pub const MAX_DECODE_LEN: usize = 8;
/// Largest codebook `enumerate_codebook` will materialize.
pub const MAX_CODEBOOK: u64 = 10_000;
/// Largest code `min_norm` will walk through.
pub const MAX_NORM_WALK: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("generator matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("generator matrix is over F_{got}, ideal has norm {expected}")]
    ModulusMismatch { expected: u64, got: u64 },
    #[error("no lattice point within radius {radius}")]
    RadiusExhausted { radius: f64 },
    #[error("block length {len} exceeds the decoder limit {max}")]
    BlockTooLong { len: usize, max: usize },
    #[error("codebook of size {size} exceeds the limit {max}")]
    CodebookTooLarge { size: u64, max: u64 },
    #[error("enumeration region too large: {0}")]
    EnumerationTooLarge(String),
    #[error("at least {min} Monte Carlo trials are required, got {got}")]
    TooFewTrials { min: usize, got: usize },
    #[error("vector is not a point of the fine lattice")]
    NotALatticePoint,
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error(transparent)]
    Ideal(#[from] IdealError),
}

/// An `(N, n)` linear code over `F_p` given by an `N × n` generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCode {
    generator: FpMatrix,
    /// Rows `h` with `h · c = 0` for every codeword `c`.
    parity: FpMatrix,
    /// Coordinates whose values determine the codeword.
    info_set: Vec<usize>,
    /// `N × n` matrix mapping the information coordinates to the codeword.
    expand: FpMatrix,
}

impl LinearCode {
    pub fn new(generator: FpMatrix) -> Result<LinearCode, LatticeError> {
        let (len, dim) = (generator.rows(), generator.cols());
        if dim > len {
            return Err(LatticeError::RankDeficient {
                rank: len,
                expected: dim,
            });
        }
        let p = generator.p();
        let mut gt = generator.transpose();
        let info_set = gt.rref();
        if info_set.len() != dim {
            return Err(LatticeError::RankDeficient {
                rank: info_set.len(),
                expected: dim,
            });
        }
        let parity = generator.transpose().null_space();

        // expand = G · G_I^{-1}
        let mut g_info = FpMatrix::zeros(p, dim, dim);
        for (r, &i) in info_set.iter().enumerate() {
            for c in 0..dim {
                g_info.set(r, c, generator.get(i, c));
            }
        }
        let mut inv = FpMatrix::zeros(p, dim, dim);
        for k in 0..dim {
            let mut e = vec![0; dim];
            e[k] = 1;
            let col = g_info
                .solve(&e)
                .expect("information submatrix is invertible");
            for (r, v) in col.into_iter().enumerate() {
                inv.set(r, k, v);
            }
        }
        let mut expand = FpMatrix::zeros(p, len, dim);
        for i in 0..len {
            for k in 0..dim {
                let col: Vec<u64> = (0..dim).map(|r| inv.get(r, k)).collect();
                let v = generator
                    .row(i)
                    .iter()
                    .zip(&col)
                    .fold(0u64, |acc, (&a, &b)| {
                        (acc + crate::field::mul_mod(a, b, p)) % p
                    });
                expand.set(i, k, v);
            }
        }
        Ok(LinearCode {
            generator,
            parity,
            info_set,
            expand,
        })
    }

    /// The zero code `{0} ⊆ F_p^len`.
    pub fn zero(p: u64, len: usize) -> LinearCode {
        LinearCode::new(FpMatrix::zeros(p, len, 0)).expect("empty generator is valid")
    }

    /// The whole space `F_p^len`.
    pub fn full(p: u64, len: usize) -> LinearCode {
        LinearCode::new(FpMatrix::identity(p, len)).expect("identity has full rank")
    }

    /// A uniformly random full-rank `len × dim` generator (rejection sampled).
    pub fn random(p: u64, len: usize, dim: usize, rng: &mut rng::Stream) -> LinearCode {
        assert!(dim <= len, "code dimension exceeds length");
        loop {
            let mut g = FpMatrix::zeros(p, len, dim);
            for i in 0..len {
                for j in 0..dim {
                    g.set(i, j, (rng::uniform(rng) * p as f64) as u64);
                }
            }
            if let Ok(code) = LinearCode::new(g) {
                return code;
            }
        }
    }

    pub fn p(&self) -> u64 {
        self.generator.p()
    }

    pub fn len(&self) -> usize {
        self.generator.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.generator.cols()
    }

    pub fn generator(&self) -> &FpMatrix {
        &self.generator
    }

    /// `x = G ⊙ y` over `F_p`.
    pub fn encode(&self, y: &[u64]) -> Result<Vec<u64>, LatticeError> {
        if y.len() != self.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(self.generator.mul_vec(y))
    }

    pub fn is_codeword(&self, c: &[u64]) -> bool {
        c.len() == self.len() && self.parity.mul_vec(c).iter().all(|&v| v == 0)
    }

    /// The message `y` with `G ⊙ y = c`, if `c` is a codeword.
    pub fn message_of(&self, c: &[u64]) -> Option<Vec<u64>> {
        if c.len() != self.len() {
            return None;
        }
        self.generator.solve(c)
    }

    fn complete(&self, info: &[u64]) -> Vec<u64> {
        self.expand.mul_vec(info)
    }
}

/// A vector of ring elements, the unscaled coordinates of a lattice point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    pub coords: Vec<QuadInt>,
}

impl LatticePoint {
    pub fn zero(ring: &Ring, len: usize) -> LatticePoint {
        LatticePoint {
            coords: vec![ring.zero(); len],
        }
    }

    pub fn embed(&self, scale: f64) -> Vec<Complex64> {
        self.coords.iter().map(|q| q.embed() * scale).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(QuadInt::is_zero)
    }

    pub fn add(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn scale_by(&self, a: QuadInt) -> LatticePoint {
        LatticePoint {
            coords: self.coords.iter().map(|&x| a * x).collect(),
        }
    }
}

/// Result of a nearest-point search.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub point: LatticePoint,
    /// Squared Euclidean distance in the scaled space.
    pub dist2: f64,
}

/// `scale · (M(C) + 𝔭^N)`.
#[derive(Debug, Clone)]
pub struct ConstructionALattice {
    code: LinearCode,
    ideal: PrimeIdeal,
    gamma: f64,
    ideal_plane: PlaneBasis,
}

impl ConstructionALattice {
    /// Physical lattice `γ p^{-1/2} (M(C) + 𝔭^N)`.
    pub fn new(
        code: LinearCode,
        ideal: PrimeIdeal,
        gamma: f64,
    ) -> Result<ConstructionALattice, LatticeError> {
        if code.p() != ideal.p() {
            return Err(LatticeError::ModulusMismatch {
                expected: ideal.p(),
                got: code.p(),
            });
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(LatticeError::BadArgument(format!("scale γ = {gamma}")));
        }
        let [g0, g1] = ideal.z_basis();
        Ok(ConstructionALattice {
            code,
            ideal,
            gamma,
            ideal_plane: PlaneBasis::new(g0.embed(), g1.embed()),
        })
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn ideal(&self) -> &PrimeIdeal {
        &self.ideal
    }

    pub fn ring(&self) -> Ring {
        self.ideal.ring()
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Factor between unscaled ring coordinates and the physical lattice.
    pub fn scale(&self) -> f64 {
        self.gamma / (self.ideal.p() as f64).sqrt()
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<ConstructionALattice, LatticeError> {
        ConstructionALattice::new(self.code.clone(), self.ideal, gamma)
    }

    /// Volume of a fundamental region in `R^{2N}`.
    pub fn volume(&self) -> f64 {
        let s = self.scale();
        let n = self.len() as i32;
        let per_coord = s * s * self.ring().covolume();
        per_coord.powi(n) * (self.ideal.p() as f64).powi(n - self.code.dim() as i32)
    }

    /// Membership: `σ(x)` is a codeword.
    pub fn is_lattice_point(&self, x: &[QuadInt]) -> bool {
        if x.len() != self.len() || x.iter().any(|q| q.ring() != self.ring()) {
            return false;
        }
        let residues: Vec<u64> = x
            .iter()
            .map(|q| self.ideal.sigma_raw(q.a, q.b).value())
            .collect();
        self.code.is_codeword(&residues)
    }

    /// Minimum squared norm of a nonzero point of the unscaled lattice and
    /// the number of points attaining it. Walks through the code, so it
    /// needs at most [`MAX_NORM_WALK`] codewords.
    pub fn min_norm(&self) -> Result<(u64, u64), LatticeError> {
        let p = self.ideal.p();
        let dim = self.code.dim();
        let size = p.saturating_pow(dim as u32);
        if size > MAX_NORM_WALK {
            return Err(LatticeError::CodebookTooLarge {
                size,
                max: MAX_NORM_WALK,
            });
        }
        let ring = self.ring();
        // lightest elements of every residue class, and of the ideal itself
        let mut radius2 = p as f64 * (1.0 + ring.d().unsigned_abs() as f64);
        let (light, ideal_min) = loop {
            let mut light = vec![(u64::MAX, 0u64); p as usize];
            let mut ideal_min = (u64::MAX, 0u64);
            for (q, _) in ring.points_in_disk(Complex64::new(0.0, 0.0), radius2) {
                let n = q.norm();
                let r = self.ideal.sigma_raw(q.a, q.b).value() as usize;
                let slot = if r == 0 && !q.is_zero() {
                    &mut ideal_min
                } else {
                    &mut light[r]
                };
                match n.cmp(&slot.0) {
                    Ordering::Less => *slot = (n, 1),
                    Ordering::Equal => slot.1 += 1,
                    Ordering::Greater => {}
                }
            }
            if light.iter().all(|l| l.0 != u64::MAX) && ideal_min.0 != u64::MAX {
                break (light, ideal_min);
            }
            radius2 *= 2.0;
        };
        // the ideal contributes vectors supported on one coordinate
        let mut best = (ideal_min.0, ideal_min.1 * self.len() as u64);
        for idx in 1..size {
            let c = self
                .code
                .encode(&digits(idx, p, dim))
                .expect("message length matches");
            let mut norm = 0;
            let mut count = 1u64;
            for &r in &c {
                let (n, k) = light[r as usize];
                norm += n;
                count = count.saturating_mul(k);
            }
            if c.iter().all(|&r| r == 0) {
                continue;
            }
            match norm.cmp(&best.0) {
                Ordering::Less => best = (norm, count),
                Ordering::Equal => best.1 = best.1.saturating_add(count),
                Ordering::Greater => {}
            }
        }
        Ok(best)
    }

    /// The lattice point `M(c)` for a codeword (or any residue vector).
    pub fn lift(&self, c: &[u64]) -> LatticePoint {
        LatticePoint {
            coords: c.iter().map(|&v| self.ideal.lift_value(v)).collect(),
        }
    }

    /// Nearest point of the coset `r + 𝔭` to the unscaled target `t`,
    /// ties resolved towards the smallest ring coordinates.
    fn nearest_in_coset(&self, t: Complex64, r: u64) -> (f64, QuadInt) {
        let ring = self.ring();
        let [g0, g1] = self.ideal.z_basis();
        let (dist, pts) = self
            .ideal_plane
            .closest_all(t - Complex64::new(r as f64, 0.0));
        let best = pts
            .into_iter()
            .map(|(i, j)| ring.elem(r as i64 + i * g0.a + j * g1.a, i * g0.b + j * g1.b))
            .min_by(QuadInt::lex_cmp)
            .expect("closest_all is never empty");
        (dist, best)
    }

    /// Exact closest lattice point to `y` among points within `radius`.
    ///
    /// For every coordinate and residue `r` the nearest point of `r + 𝔭` is
    /// found by a planar search. The codeword is then chosen by a pruned
    /// depth-first search over the information coordinates. Ties go to the
    /// lexicographically smallest coordinate vector.
    pub fn decode_nearest(&self, y: &[Complex64], radius: f64) -> Result<Decoded, LatticeError> {
        let n = self.len();
        if y.len() != n {
            return Err(LatticeError::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        if n > MAX_DECODE_LEN {
            return Err(LatticeError::BlockTooLong {
                len: n,
                max: MAX_DECODE_LEN,
            });
        }
        let p = self.ideal.p() as usize;
        let s = self.scale();
        let s2 = s * s;
        let targets: Vec<Complex64> = y.iter().map(|&yi| yi / s).collect();
        let ring = self.ring();

        // information coordinates get the cost of every residue class;
        // the rest are bounded below by their distance to O_K
        let info = &self.code.info_set;
        let table: Vec<Vec<(f64, QuadInt)>> = info
            .iter()
            .map(|&i| {
                (0..p as u64)
                    .map(|r| self.nearest_in_coset(targets[i], r))
                    .collect()
            })
            .collect();
        let min_cost = |i: usize| -> f64 {
            match info.iter().position(|&j| j == i) {
                Some(k) => table[k].iter().map(|c| c.0).fold(f64::INFINITY, f64::min),
                None => (targets[i] - ring.quantize(targets[i]).embed()).norm_sqr(),
            }
        };
        let mut tail_bound = vec![0.0; info.len() + 1];
        tail_bound[info.len()] = (0..n).filter(|i| !info.contains(i)).map(min_cost).sum();
        for k in (0..info.len()).rev() {
            tail_bound[k] = tail_bound[k + 1] + min_cost(info[k]);
        }
        let order: Vec<Vec<usize>> = table
            .iter()
            .map(|row| {
                let mut idx: Vec<usize> = (0..p).collect();
                idx.sort_by(|&a, &b| row[a].0.total_cmp(&row[b].0).then(a.cmp(&b)));
                idx
            })
            .collect();

        let limit = if radius.is_finite() {
            radius * radius / s2
        } else {
            f64::INFINITY
        };
        let mut search = CodewordSearch {
            lat: self,
            targets: &targets,
            table: &table,
            order: &order,
            tail_bound: &tail_bound,
            limit,
            best: None,
            info_vals: vec![0; info.len()],
        };
        search.descend(0, 0.0);

        match search.best {
            Some((dist, coords)) => Ok(Decoded {
                point: LatticePoint { coords },
                dist2: dist * s2,
            }),
            None => Err(LatticeError::RadiusExhausted { radius }),
        }
    }

    /// Brute-force enumeration of all codewords; only for validation of the
    /// pruned search on tiny codes.
    pub fn decode_exhaustive(&self, y: &[Complex64]) -> Decoded {
        let p = self.ideal.p();
        let s = self.scale();
        let dim = self.code.dim();
        let mut best: Option<(f64, Vec<QuadInt>)> = None;
        let total = p.pow(dim as u32);
        for idx in 0..total {
            let msg = digits(idx, p, dim);
            let c = self.code.encode(&msg).expect("message length matches");
            let mut dist = 0.0;
            let mut coords = Vec::with_capacity(c.len());
            for (yi, &r) in y.iter().zip(&c) {
                let (dd, q) = self.nearest_in_coset(*yi / s, r);
                dist += dd;
                coords.push(q);
            }
            let replace = match &best {
                None => true,
                Some((bd, bc)) => better_lex_smallest(dist, &coords, *bd, bc),
            };
            if replace {
                best = Some((dist, coords));
            }
        }
        let (dist, coords) = best.expect("code contains the zero word");
        Decoded {
            point: LatticePoint { coords },
            dist2: dist * s * s,
        }
    }

    /// `x mod Λ`: the difference between `x` and its nearest lattice point.
    pub fn reduce(&self, x: &[Complex64]) -> Result<Vec<Complex64>, LatticeError> {
        let q = self.decode_nearest(x, f64::INFINITY)?;
        let s = self.scale();
        Ok(x.iter()
            .zip(&q.point.coords)
            .map(|(xi, c)| xi - c.embed() * s)
            .collect())
    }

    /// Exact reduction of a ring vector into the Voronoi cell of `Λ`.
    pub fn reduce_point(&self, x: &LatticePoint) -> Result<LatticePoint, LatticeError> {
        let y = x.embed(self.scale());
        let q = self.decode_nearest(&y, f64::INFINITY)?;
        Ok(x.sub(&q.point))
    }

    /// Uniform sample from the fundamental parallelepiped of the sublattice
    /// `scale · p · O_K^N`, which tiles whole cells of this lattice.
    pub fn sample_box(&self, rng: &mut rng::Stream) -> Vec<Complex64> {
        let side = self.scale() * self.ideal.p() as f64;
        let xi = self.ring().xi();
        (0..self.len())
            .map(|_| {
                let u = rng::uniform(rng);
                let v = rng::uniform(rng);
                (Complex64::new(u, 0.0) + xi * v) * side
            })
            .collect()
    }

    /// Uniform sample over the Voronoi cell of the origin.
    pub fn sample_voronoi(&self, rng: &mut rng::Stream) -> Result<Vec<Complex64>, LatticeError> {
        let x = self.sample_box(rng);
        self.reduce(&x)
    }

    /// Monte Carlo second moment of the Voronoi cell.
    pub fn estimate_second_moment(
        &self,
        trials: usize,
        seed: u64,
    ) -> Result<SecondMoment, LatticeError> {
        if trials < 1000 {
            return Err(LatticeError::TooFewTrials {
                min: 1000,
                got: trials,
            });
        }
        let n = self.len() as f64;
        let samples: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::stream(seed, i);
                let e = self.sample_voronoi(&mut rng)?;
                Ok(e.iter().map(|z| z.norm_sqr()).sum::<f64>() / n)
            })
            .collect::<Result<_, LatticeError>>()?;
        let (sigma2, stderr) = mean_stderr(&samples);
        let norm = self.volume().powf(1.0 / n);
        Ok(SecondMoment {
            sigma2,
            sigma2_stderr: stderr,
            g: sigma2 / 2.0 / norm,
            g_stderr: stderr / 2.0 / norm,
            trials,
        })
    }
}

/// Monte Carlo estimate of a lattice's quantization performance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    /// Mean squared quantization error per complex dimension.
    pub sigma2: f64,
    pub sigma2_stderr: f64,
    /// Normalized second moment per real dimension.
    pub g: f64,
    pub g_stderr: f64,
    pub trials: usize,
}

struct CodewordSearch<'a> {
    lat: &'a ConstructionALattice,
    targets: &'a [Complex64],
    /// Costs of the information coordinates, indexed by depth.
    table: &'a [Vec<(f64, QuadInt)>],
    order: &'a [Vec<usize>],
    tail_bound: &'a [f64],
    limit: f64,
    best: Option<(f64, Vec<QuadInt>)>,
    info_vals: Vec<u64>,
}

impl CodewordSearch<'_> {
    fn bound(&self) -> f64 {
        match &self.best {
            Some((d, _)) => *d,
            None => self.limit,
        }
    }

    fn exceeds(&self, value: f64) -> bool {
        let b = self.bound();
        value > b && !same_dist(value, b)
    }

    fn descend(&mut self, depth: usize, partial: f64) {
        if depth == self.table.len() {
            self.leaf();
            return;
        }
        for &r in &self.order[depth] {
            let cost = partial + self.table[depth][r].0;
            if self.exceeds(cost + self.tail_bound[depth + 1]) {
                // residues are sorted by cost, later ones are no better
                break;
            }
            self.info_vals[depth] = r as u64;
            self.descend(depth + 1, cost);
        }
    }

    fn leaf(&mut self) {
        let code = &self.lat.code;
        let c = code.complete(&self.info_vals);
        let mut dist = 0.0;
        let mut coords = Vec::with_capacity(c.len());
        let mut depth = 0;
        for (i, &r) in c.iter().enumerate() {
            let (d, q) = if code.info_set.get(depth) == Some(&i) {
                depth += 1;
                self.table[depth - 1][r as usize]
            } else {
                self.lat.nearest_in_coset(self.targets[i], r)
            };
            dist += d;
            coords.push(q);
        }
        if self.exceeds(dist) {
            return;
        }
        let replace = match &self.best {
            None => true,
            Some((bd, bc)) => better_lex_smallest(dist, &coords, *bd, bc),
        };
        if replace {
            self.best = Some((dist, coords));
        }
    }
}

/// Base-`p` digits of `idx`, least significant first.
pub(crate) fn digits(mut idx: u64, p: u64, len: usize) -> Vec<u64> {
    let mut out = vec![0; len];
    for slot in out.iter_mut() {
        *slot = idx % p;
        idx /= p;
    }
    out
}

/// How the scale `γ` of a nested code is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GammaChoice {
    /// `γ = 2 √(2 N P |d|^{-1/2})`.
    ClosedForm,
    /// Scale chosen so that the coarse lattice's second moment per complex
    /// dimension equals `P`, estimated by Monte Carlo.
    PowerMatched {
        trials: usize,
        seed: u64,
    },
    Fixed {
        gamma: f64,
    },
}

pub fn closed_form_gamma(len: usize, power: f64, d: i64) -> f64 {
    2.0 * (2.0 * len as f64 * power / (d.unsigned_abs() as f64).sqrt()).sqrt()
}

/// A nested pair `Λ_c ⊆ Λ_f` with codebook `Λ_f ∩ V(Λ_c)`.
#[derive(Debug, Clone)]
pub struct NestedCode {
    coarse: ConstructionALattice,
    fine: ConstructionALattice,
    g_tilde: FpMatrix,
    m_c: usize,
    m_f: usize,
    power: f64,
}

impl NestedCode {
    /// `G_f = [G_c  G̃]`; both lattices share `𝔭` and the scale.
    pub fn build(
        g_c: FpMatrix,
        g_tilde: FpMatrix,
        ideal: PrimeIdeal,
        power: f64,
        gamma: GammaChoice,
    ) -> Result<NestedCode, LatticeError> {
        if g_c.rows() != g_tilde.rows() {
            return Err(LatticeError::DimensionMismatch {
                expected: g_c.rows(),
                got: g_tilde.rows(),
            });
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(LatticeError::BadArgument(format!("power P = {power}")));
        }
        let len = g_c.rows();
        let m_c = g_c.cols();
        let m_f = m_c + g_tilde.cols();
        let coarse_code = LinearCode::new(g_c.clone())?;
        let fine_code = LinearCode::new(g_c.hcat(&g_tilde))?;
        let closed = closed_form_gamma(len, power, ideal.ring().d());
        let coarse = ConstructionALattice::new(coarse_code, ideal, closed)?;
        let gamma = match gamma {
            GammaChoice::ClosedForm => closed,
            GammaChoice::Fixed { gamma } => gamma,
            GammaChoice::PowerMatched { trials, seed } => {
                let unit = coarse.with_gamma((ideal.p() as f64).sqrt())?;
                let m = unit.estimate_second_moment(trials, seed)?;
                (power / m.sigma2).sqrt() * (ideal.p() as f64).sqrt()
            }
        };
        let coarse = coarse.with_gamma(gamma)?;
        let fine = ConstructionALattice::new(fine_code, ideal, gamma)?;
        Ok(NestedCode {
            coarse,
            fine,
            g_tilde,
            m_c,
            m_f,
            power,
        })
    }

    pub fn coarse(&self) -> &ConstructionALattice {
        &self.coarse
    }

    pub fn fine(&self) -> &ConstructionALattice {
        &self.fine
    }

    pub fn m_c(&self) -> usize {
        self.m_c
    }

    pub fn m_f(&self) -> usize {
        self.m_f
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn len(&self) -> usize {
        self.fine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine.is_empty()
    }

    pub fn p(&self) -> u64 {
        self.fine.ideal().p()
    }

    pub fn scale(&self) -> f64 {
        self.fine.scale()
    }

    /// Number of message symbols over `F_p`.
    pub fn message_len(&self) -> usize {
        self.m_f - self.m_c
    }

    /// `((m_f - m_c)/N) log₂ p` bits per complex channel use.
    pub fn design_rate(&self) -> f64 {
        design_rate(self.m_f - self.m_c, self.len(), self.p())
    }

    pub fn codebook_size(&self) -> u64 {
        self.p().saturating_pow(self.message_len() as u32)
    }

    /// Codeword for a message `w ∈ F_p^{m_f - m_c}`: `M(G̃ w)` reduced into
    /// the Voronoi cell of `Λ_c`.
    pub fn codeword(&self, w: &[u64]) -> Result<LatticePoint, LatticeError> {
        if w.len() != self.message_len() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.message_len(),
                got: w.len(),
            });
        }
        let c = self.g_tilde.mul_vec(w);
        self.coarse.reduce_point(&self.fine.lift(&c))
    }

    /// Recovers the message carried by a fine lattice point. Coarse lattice
    /// components are ignored, so any representative of the coset works.
    pub fn message_of(&self, x: &LatticePoint) -> Result<Vec<u64>, LatticeError> {
        let residues = self.fine.ideal().sigma_vec(&x.coords)?;
        let z = self
            .fine
            .code()
            .message_of(&residues)
            .ok_or(LatticeError::NotALatticePoint)?;
        Ok(z[self.m_c..].to_vec())
    }

    /// All `(message, codeword)` pairs in lexicographic message order.
    pub fn enumerate_codebook(&self) -> Result<Vec<(Vec<u64>, LatticePoint)>, LatticeError> {
        let size = self.codebook_size();
        if size > MAX_CODEBOOK {
            return Err(LatticeError::CodebookTooLarge {
                size,
                max: MAX_CODEBOOK,
            });
        }
        let k = self.message_len();
        (0..size)
            .map(|idx| {
                let mut w = digits(idx, self.p(), k);
                w.reverse();
                let t = self.codeword(&w)?;
                Ok((w, t))
            })
            .collect()
    }

    /// `x mod Λ_c` on physical coordinates.
    pub fn mod_coarse(&self, x: &[Complex64]) -> Result<Vec<Complex64>, LatticeError> {
        self.coarse.reduce(x)
    }

    /// Average power `‖t‖²/N` over the codebook.
    pub fn codebook_power(&self) -> Result<f64, LatticeError> {
        let book = self.enumerate_codebook()?;
        let s = self.scale();
        let total: f64 = book
            .iter()
            .map(|(_, t)| t.embed(s).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        Ok(total / (book.len() as f64 * self.len() as f64))
    }
}

pub fn design_rate(message_len: usize, len: usize, p: u64) -> f64 {
    message_len as f64 / len as f64 * (p as f64).log2()
}

/// Volume of the unit ball in `R^{2N}` for `N ∈ {1, 2}`.
pub fn unit_ball_volume(real_dim: usize) -> f64 {
    use std::f64::consts::PI;
    match real_dim {
        2 => PI,
        4 => PI * PI / 2.0,
        _ => {
            // V_n = π^{n/2} / Γ(n/2 + 1), via the two-step recursion
            let mut v = [1.0, 2.0];
            for n in 2..=real_dim {
                let next = 2.0 * PI / n as f64 * v[n % 2];
                v[n % 2] = next;
            }
            v[real_dim % 2]
        }
    }
}

/// Lower and upper point-count bounds for `|O_K^N ∩ B(s, r)|`:
/// `(r ∓ √(2N|d|)/2)^{2N} V_{2N} / (√|Δ_K|/2)^N`.
pub fn point_count_bounds(ring: &Ring, len: usize, r: f64) -> (f64, f64) {
    let slack = (2.0 * len as f64 * ring.d().unsigned_abs() as f64).sqrt() / 2.0;
    let dim = 2 * len as i32;
    let density = unit_ball_volume(2 * len) / ring.covolume().powi(len as i32);
    let lo = (r - slack).max(0.0).powi(dim) * density;
    let hi = (r + slack).powi(dim) * density;
    (lo, hi)
}

/// Exact number of points of `O_K^N` in the closed ball of radius `r`
/// around `center ∈ R^{2N}` (pairs are real and imaginary parts).
pub fn count_points_in_ball(
    ring: &Ring,
    len: usize,
    center: &[f64],
    r: f64,
) -> Result<u64, LatticeError> {
    if !(1..=2).contains(&len) {
        return Err(LatticeError::EnumerationTooLarge(format!(
            "block length {len} (supported: 1 or 2)"
        )));
    }
    if !(r.is_finite() && (0.0..=20.0).contains(&r)) {
        return Err(LatticeError::EnumerationTooLarge(format!(
            "radius {r} (limit 20)"
        )));
    }
    if center.len() != 2 * len {
        return Err(LatticeError::DimensionMismatch {
            expected: 2 * len,
            got: center.len(),
        });
    }
    let c: Vec<Complex64> = center
        .chunks(2)
        .map(|ch| Complex64::new(ch[0], ch[1]))
        .collect();
    let r2 = r * r;
    let first = ring.points_in_disk(c[0], r2);
    if len == 1 {
        return Ok(first.len() as u64);
    }
    Ok(first
        .iter()
        .map(|(_, d)| ring.points_in_disk(c[1], r2 - d).len() as u64)
        .sum())
}

/// Lexicographic comparison of two points, for deterministic sorting.
pub fn point_cmp(x: &LatticePoint, y: &LatticePoint) -> Ordering {
    lex_cmp_slices(&x.coords, &y.coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::DEFAULT_RINGS;

    fn ideal(d: i64, p: u64) -> PrimeIdeal {
        PrimeIdeal::above(&Ring::new(d).unwrap(), p).unwrap()
    }

    #[test]
    fn encode_examples() {
        let code = LinearCode::new(FpMatrix::from_rows(5, &[vec![1], vec![2]])).unwrap();
        assert_eq!(code.encode(&[3]).unwrap(), vec![3, 1]);
        assert_eq!(code.encode(&[0]).unwrap(), vec![0, 0]);
        let full = LinearCode::full(7, 3);
        assert_eq!(full.encode(&[1, 5, 6]).unwrap(), vec![1, 5, 6]);
        assert_eq!(
            code.encode(&[1, 2]),
            Err(LatticeError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        );
    }

    #[test]
    fn rank_checked() {
        let g = FpMatrix::from_rows(5, &[vec![1, 2], vec![2, 4], vec![3, 1]]);
        assert_eq!(
            LinearCode::new(g),
            Err(LatticeError::RankDeficient {
                rank: 1,
                expected: 2
            })
        );
    }

    #[test]
    fn codeword_test_and_messages() {
        let code = LinearCode::new(FpMatrix::from_rows(
            7,
            &[vec![1, 0], vec![3, 1], vec![2, 5], vec![6, 6]],
        ))
        .unwrap();
        let c = code.encode(&[4, 2]).unwrap();
        assert!(code.is_codeword(&c));
        assert_eq!(code.message_of(&c), Some(vec![4, 2]));
        let mut bad = c.clone();
        bad[0] = (bad[0] + 1) % 7;
        assert!(!code.is_codeword(&bad));
        assert_eq!(code.message_of(&bad), None);
    }

    #[test]
    fn membership_examples() {
        let id = ideal(-5, 23);
        let ring = id.ring();
        let code = LinearCode::new(FpMatrix::from_rows(23, &[vec![1], vec![5]])).unwrap();
        let lat = ConstructionALattice::new(code.clone(), id, 1.0).unwrap();
        let c = code.encode(&[7]).unwrap();
        let x = lat.lift(&c);
        assert!(lat.is_lattice_point(&x.coords));
        let multiple = vec![ring.elem(23 * 3, -23), ring.elem(0, 23 * 2)];
        assert!(lat.is_lattice_point(&multiple));
        // adding 1 to the first coordinate gives syndrome outside the code
        let mut shifted = x.coords.clone();
        shifted[0] = shifted[0] + ring.one();
        assert!(!lat.is_lattice_point(&shifted));
    }

    #[test]
    fn decode_lattice_point_is_itself() {
        let id = ideal(-2, 11);
        let code = LinearCode::new(FpMatrix::from_rows(11, &[vec![1], vec![4], vec![9]])).unwrap();
        let lat = ConstructionALattice::new(code.clone(), id, 2.5).unwrap();
        let ring = id.ring();
        let x = lat.lift(&code.encode(&[6]).unwrap());
        let x = x.add(&LatticePoint {
            coords: vec![ring.elem(11, 0), ring.zero(), ring.elem(-22, 0)],
        });
        let dec = lat
            .decode_nearest(&x.embed(lat.scale()), f64::INFINITY)
            .unwrap();
        assert_eq!(dec.point, x);
        assert!(dec.dist2 < 1e-18);
    }

    #[test]
    fn full_code_decodes_like_quantize() {
        for d in DEFAULT_RINGS {
            let ring = Ring::new(d).unwrap();
            let (p, _) = crate::ideal::usable_primes(&ring, 50)[0];
            let id = PrimeIdeal::above(&ring, p).unwrap();
            let lat = ConstructionALattice::new(LinearCode::full(p, 1), id, 3.0).unwrap();
            let s = lat.scale();
            for k in 0..50 {
                let y =
                    Complex64::new((k as f64 * 0.37).sin() * 4.0, (k as f64 * 0.91).cos() * 4.0);
                let dec = lat.decode_nearest(&[y], f64::INFINITY).unwrap();
                let q = ring.quantize(y / s);
                assert!(same_dist(dec.dist2, (y - q.embed() * s).norm_sqr()));
            }
        }
    }

    #[test]
    fn radius_exhaustion() {
        let id = ideal(-1, 5);
        let lat = ConstructionALattice::new(LinearCode::zero(5, 2), id, 1.0).unwrap();
        let y = vec![Complex64::new(0.9, 0.4), Complex64::new(-0.3, 0.2)];
        assert!(matches!(
            lat.decode_nearest(&y, 1e-3),
            Err(LatticeError::RadiusExhausted { .. })
        ));
        assert!(lat.decode_nearest(&y, 10.0).is_ok());
        let long = vec![Complex64::new(0.0, 0.0); 9];
        let lat9 = ConstructionALattice::new(LinearCode::zero(5, 9), id, 1.0).unwrap();
        assert!(matches!(
            lat9.decode_nearest(&long, 1.0),
            Err(LatticeError::BlockTooLong { len: 9, max: 8 })
        ));
    }

    #[test]
    fn nested_codebook_sizes_and_rates() {
        let id = ideal(-1, 5);
        let g_c = FpMatrix::from_rows(5, &[vec![1], vec![2]]);
        let same = NestedCode::build(
            g_c.clone(),
            FpMatrix::zeros(5, 2, 0),
            id,
            10.0,
            GammaChoice::ClosedForm,
        )
        .unwrap();
        let book = same.enumerate_codebook().unwrap();
        assert_eq!(book.len(), 1);
        assert!(book[0].1.is_zero());

        let nc = NestedCode::build(
            FpMatrix::zeros(5, 2, 0),
            FpMatrix::from_rows(5, &[vec![1], vec![3]]),
            id,
            10.0,
            GammaChoice::ClosedForm,
        )
        .unwrap();
        let book = nc.enumerate_codebook().unwrap();
        assert_eq!(book.len(), 5);
        for (w, t) in &book {
            assert_eq!(&nc.message_of(t).unwrap(), w);
            assert!(nc.fine().is_lattice_point(&t.coords));
        }

        let id7 = ideal(-3, 7);
        let nc7 = NestedCode::build(
            FpMatrix::zeros(7, 2, 0),
            FpMatrix::identity(7, 2),
            id7,
            1.0,
            GammaChoice::ClosedForm,
        )
        .unwrap();
        assert!((nc7.design_rate() - 7f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn oversize_codebook_rejected() {
        let id = ideal(-1, 13);
        let nc = NestedCode::build(
            FpMatrix::zeros(13, 4, 0),
            FpMatrix::identity(13, 4),
            id,
            10.0,
            GammaChoice::ClosedForm,
        )
        .unwrap();
        assert!(matches!(
            nc.enumerate_codebook(),
            Err(LatticeError::CodebookTooLarge { size: 28561, .. })
        ));
    }

    #[test]
    fn mod_coarse_examples() {
        let id = ideal(-2, 3);
        let nc = NestedCode::build(
            FpMatrix::from_rows(3, &[vec![1], vec![1]]),
            FpMatrix::from_rows(3, &[vec![0], vec![1]]),
            id,
            4.0,
            GammaChoice::ClosedForm,
        )
        .unwrap();
        let s = nc.scale();
        let ring = id.ring();
        let coarse_pt = nc.coarse().lift(&[2, 2]).add(&LatticePoint {
            coords: vec![ring.elem(3, 0), ring.zero()],
        });
        let r = nc.mod_coarse(&coarse_pt.embed(s)).unwrap();
        assert!(r.iter().all(|z| z.norm() < 1e-9));

        let small = vec![
            Complex64::new(0.01, -0.02) * s,
            Complex64::new(0.03, 0.0) * s,
        ];
        let r = nc.mod_coarse(&small).unwrap();
        assert!(r.iter().zip(&small).all(|(a, b)| (a - b).norm() < 1e-12));

        let x = vec![Complex64::new(3.7, -1.2) * s, Complex64::new(-2.1, 5.5) * s];
        let once = nc.mod_coarse(&x).unwrap();
        let twice = nc.mod_coarse(&once).unwrap();
        assert!(once.iter().zip(&twice).all(|(a, b)| (a - b).norm() < 1e-9));
    }

    #[test]
    fn ball_counts() {
        let g = Ring::new(-1).unwrap();
        assert_eq!(count_points_in_ball(&g, 1, &[0.0, 0.0], 1.0).unwrap(), 5);
        assert_eq!(count_points_in_ball(&g, 1, &[0.0, 0.0], 1.5).unwrap(), 9);
        // oracle: brute-force box
        let brute = (-2i64..=2)
            .flat_map(|a| (-2i64..=2).map(move |b| (a * a + b * b) as f64))
            .filter(|&n| n <= 2.25)
            .count();
        assert_eq!(brute, 9);
        assert!(count_points_in_ball(&g, 3, &[0.0; 6], 1.0).is_err());
        assert!(count_points_in_ball(&g, 1, &[0.0, 0.0], 25.0).is_err());
    }

    #[test]
    fn ball_volume_recursion() {
        use std::f64::consts::PI;
        assert!((unit_ball_volume(6) - PI.powi(3) / 6.0).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn second_moment_of_square_and_hexagonal_cells() {
        let gauss = ConstructionALattice::new(LinearCode::full(5, 1), ideal(-1, 5), 1.0).unwrap();
        let m = gauss.estimate_second_moment(20_000, 1).unwrap();
        assert!((m.g - 1.0 / 12.0).abs() < 4.0 * m.g_stderr, "{m:?}");
        let s = gauss.scale();
        assert!((m.sigma2 - s * s / 6.0).abs() < 4.0 * m.sigma2_stderr);

        let eis = ConstructionALattice::new(LinearCode::full(7, 1), ideal(-3, 7), 1.0).unwrap();
        let h = eis.estimate_second_moment(20_000, 2).unwrap();
        let hex = 5.0 / (36.0 * 3f64.sqrt());
        assert!((h.g - hex).abs() < 4.0 * h.g_stderr, "{h:?}");
        assert!(h.g < m.g);
        let floor = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E);
        assert!(h.g >= floor - 3.0 * h.g_stderr);
        assert!(matches!(
            gauss.estimate_second_moment(10, 0),
            Err(LatticeError::TooFewTrials { .. })
        ));
    }
}
