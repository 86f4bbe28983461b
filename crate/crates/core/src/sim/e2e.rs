//! End-to-end transmission through the relay network.
//!
//! Each user maps its message to a codeword `t_k`, subtracts a dither and
//! sends `x_k = (t_k − u_k) mod Λ_c`. Relay `m` scales its observation by
//! `α_m`, adds back `Σ a_mk u_k`, decodes to the nearest fine lattice point
//! and reads off the message of `Σ a_mk t_k mod Λ_c`, which should equal
//! `Σ σ(a_mk) w_k` over `F_p`.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{db_to_power, draw_channel, relays_at, ChannelMatrix};
use super::SimError;
use crate::field::FpMatrix;
use crate::ideal::{PrimeIdeal, PrimeKind};
use crate::lattice::{ConstructionALattice, GammaChoice, LatticePoint, LinearCode, NestedCode};
use crate::rate::{select_matrix, ChannelVector, SearchOptions};
use crate::ring::{QuadInt, Ring};
use crate::rng::{self, mean_stderr, Stream};

/// Stream index reserved for drawing the code generator.
const CODE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum E2EChannel {
    /// Fresh `CN(0, 1)` channel every trial.
    Rayleigh,
    /// With `a` given the coefficients are pinned instead of selected.
    Fixed {
        h: ChannelMatrix,
        #[serde(default)]
        a: Option<Vec<Vec<(i64, i64)>>>,
    },
    /// `h_m = a_m` with the coefficients pinned to `a`, given as ring
    /// coordinates `(a, b)` of `a + bξ`.
    Integer { a: Vec<Vec<(i64, i64)>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E2EConfig {
    pub ring: i64,
    pub p: u64,
    pub block_len: usize,
    pub m_c: usize,
    pub m_f: usize,
    pub users: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub seed: u64,
    pub channel: E2EChannel,
    /// Drop the receiver noise.
    pub noiseless: bool,
    pub gamma: GammaChoice,
    /// Scale a fixed channel so that its network rate exceeds the design
    /// rate by this many bits.
    pub rate_gap: Option<f64>,
    pub search: SearchOptions,
    /// Number of random generators tried; the one whose fine lattice has
    /// the largest minimum norm (then fewest minimal vectors) is kept.
    pub code_candidates: usize,
}

impl E2EConfig {
    /// Defaults for everything but the code parameters.
    pub fn new(ring: i64, p: u64, block_len: usize, m_c: usize, m_f: usize) -> E2EConfig {
        E2EConfig {
            ring,
            p,
            block_len,
            m_c,
            m_f,
            users: 2,
            snr_db: 20.0,
            trials: 100,
            seed: 1,
            channel: E2EChannel::Rayleigh,
            noiseless: false,
            gamma: GammaChoice::PowerMatched {
                trials: 100_000,
                seed: 2,
            },
            rate_gap: None,
            search: SearchOptions::default(),
            code_candidates: 64,
        }
    }

    pub fn power(&self) -> f64 {
        db_to_power(self.snr_db)
    }
}

/// A prepared simulation: code, lattice scale and (for non-fading
/// channels) the channel and coefficients.
#[derive(Debug, Clone)]
pub struct E2ESetup {
    pub config: E2EConfig,
    pub ring: Ring,
    pub ideal: PrimeIdeal,
    pub nested: NestedCode,
    /// Factor applied to a fixed channel by rate calibration.
    pub gain: f64,
    pub fixed: Option<FixedLink>,
}

#[derive(Debug, Clone)]
pub struct FixedLink {
    pub h: ChannelMatrix,
    pub a: Vec<Vec<QuadInt>>,
    pub network_rate: f64,
}

fn fixed_link(
    h: ChannelMatrix,
    ring: &Ring,
    ideal: &PrimeIdeal,
    power: f64,
    search: SearchOptions,
) -> Result<FixedLink, SimError> {
    let sel = select_matrix(&relays_at(&h, power)?, ring, search, Some(ideal))?;
    Ok(FixedLink {
        h,
        a: sel.matrix(),
        network_rate: sel.network_rate,
    })
}

/// Gain `c` with network rate of `c·H` equal to `target`, by bisection on
/// `log c`. The rate is nondecreasing in `c`.
pub fn calibrate_gain(
    h: &ChannelMatrix,
    ring: &Ring,
    ideal: &PrimeIdeal,
    power: f64,
    target: f64,
    search: SearchOptions,
) -> Result<f64, SimError> {
    let rate_at = |log_c: f64| -> Result<f64, SimError> {
        let c = log_c.exp();
        let scaled: ChannelMatrix = h
            .iter()
            .map(|row| row.iter().map(|z| z * c).collect())
            .collect();
        Ok(fixed_link(scaled, ring, ideal, power, search)?.network_rate)
    };
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    while rate_at(hi)? < target {
        hi += 1.0;
        if hi > 16.0 {
            return Err(SimError::Config(format!(
                "rate {target} bits is not reachable by scaling the channel"
            )));
        }
    }
    while rate_at(lo)? > target {
        lo -= 1.0;
        if lo < -16.0 {
            return Err(SimError::Config(format!(
                "rate {target} bits is too low to calibrate"
            )));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

/// Builds the nested code and, for non-fading channels, fixes the channel
/// and coefficient matrix.
pub fn prepare(cfg: &E2EConfig) -> Result<E2ESetup, SimError> {
    if cfg.trials == 0 {
        return Err(SimError::Config("trials must be at least 1".into()));
    }
    if cfg.users == 0 {
        return Err(SimError::Config("need at least one user".into()));
    }
    if cfg.m_c > cfg.m_f || cfg.m_f > cfg.block_len {
        return Err(SimError::Config(format!(
            "need m_c ≤ m_f ≤ N, got m_c = {}, m_f = {}, N = {}",
            cfg.m_c, cfg.m_f, cfg.block_len
        )));
    }
    if !cfg.snr_db.is_finite() {
        return Err(SimError::Config("SNR must be finite".into()));
    }
    let ring = Ring::new(cfg.ring)?;
    let ideal = PrimeIdeal::above(&ring, cfg.p)?;
    let g_f = choose_code(cfg, &ideal)?;
    let (g_c, g_tilde) = split_columns(g_f.generator(), cfg.m_c);
    let power = cfg.power();
    let nested = NestedCode::build(g_c, g_tilde, ideal, power, cfg.gamma)?;

    let mut gain = 1.0;
    let fixed = match &cfg.channel {
        E2EChannel::Rayleigh => None,
        E2EChannel::Fixed { h, a: None } => {
            check_square(h, cfg.users)?;
            if let Some(gap) = cfg.rate_gap {
                let target = nested.design_rate() + gap;
                gain = calibrate_gain(h, &ring, &ideal, power, target, cfg.search)?;
            }
            let scaled = h
                .iter()
                .map(|row| row.iter().map(|z| z * gain).collect())
                .collect();
            Some(fixed_link(scaled, &ring, &ideal, power, cfg.search)?)
        }
        E2EChannel::Fixed { h, a: Some(a) } => {
            check_square(h, cfg.users)?;
            Some(pinned_link(h.clone(), coeff_rows(&ring, a), power)?)
        }
        E2EChannel::Integer { a } => {
            let a = coeff_rows(&ring, a);
            let h: ChannelMatrix = a
                .iter()
                .map(|row| row.iter().map(QuadInt::embed).collect())
                .collect();
            check_square(&h, cfg.users)?;
            Some(pinned_link(h, a, power)?)
        }
    };
    Ok(E2ESetup {
        config: cfg.clone(),
        ring,
        ideal,
        nested,
        gain,
        fixed,
    })
}

fn choose_code(cfg: &E2EConfig, ideal: &PrimeIdeal) -> Result<LinearCode, SimError> {
    let mut code_rng = rng::stream(cfg.seed, CODE_STREAM);
    let mut best: Option<((u64, u64), LinearCode)> = None;
    for _ in 0..cfg.code_candidates.max(1) {
        let code = LinearCode::random(cfg.p, cfg.block_len, cfg.m_f, &mut code_rng);
        if cfg.code_candidates <= 1 {
            return Ok(code);
        }
        let lat = ConstructionALattice::new(code.clone(), *ideal, 1.0)?;
        let (norm, count) = lat.min_norm()?;
        let better = match &best {
            None => true,
            Some(((bn, bc), _)) => norm > *bn || (norm == *bn && count < *bc),
        };
        if better {
            best = Some(((norm, count), code));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

fn coeff_rows(ring: &Ring, a: &[Vec<(i64, i64)>]) -> Vec<Vec<QuadInt>> {
    a.iter()
        .map(|row| row.iter().map(|&(x, y)| ring.elem(x, y)).collect())
        .collect()
}

fn pinned_link(h: ChannelMatrix, a: Vec<Vec<QuadInt>>, power: f64) -> Result<FixedLink, SimError> {
    if a.len() != h.len() {
        return Err(SimError::Config(
            "one coefficient row per relay is required".into(),
        ));
    }
    let relays = relays_at(&h, power)?;
    let mut network_rate = f64::INFINITY;
    for (ch, am) in relays.iter().zip(&a) {
        network_rate = network_rate.min(crate::rate::computation_rate(ch, am)?);
    }
    Ok(FixedLink { h, a, network_rate })
}

fn check_square(h: &ChannelMatrix, users: usize) -> Result<(), SimError> {
    if h.len() != users || h.iter().any(|r| r.len() != users) {
        return Err(SimError::Config(format!("channel must be {users}×{users}")));
    }
    Ok(())
}

fn split_columns(g: &FpMatrix, at: usize) -> (FpMatrix, FpMatrix) {
    let p = g.p();
    let mut left = FpMatrix::zeros(p, g.rows(), at);
    let mut right = FpMatrix::zeros(p, g.rows(), g.cols() - at);
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            if j < at {
                left.set(i, j, g.get(i, j));
            } else {
                right.set(i, j - at, g.get(i, j));
            }
        }
    }
    (left, right)
}

/// One line of the trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E2ETrialResult {
    pub trial: usize,
    pub success: bool,
    /// Decoded function per relay; `None` when decoding failed outright.
    pub decoded: Vec<Option<Vec<u64>>>,
    /// `Σ_k σ(a_mk) w_k` per relay.
    pub truth: Vec<Vec<u64>>,
    /// Message of the lattice combination `Σ a_mk t_k`; equals `truth`.
    pub combination: Vec<Vec<u64>>,
    /// `‖z_eq‖²/N` per relay.
    pub noise_power: Vec<f64>,
    /// `‖x‖²/N` averaged over users.
    pub tx_power: f64,
    pub network_rate: f64,
    pub error: Option<String>,
}

struct Link {
    h: ChannelMatrix,
    a: Vec<Vec<QuadInt>>,
    alpha: Vec<Complex64>,
    network_rate: f64,
}

impl E2ESetup {
    fn alpha(&self, h: &[Complex64], a: &[QuadInt]) -> Complex64 {
        let e: Vec<Complex64> = a.iter().map(QuadInt::embed).collect();
        if self.config.noiseless {
            // infinite-SNR limit of the MMSE scaling
            let hha: Complex64 = h.iter().zip(&e).map(|(h, a)| h.conj() * a).sum();
            hha / h.iter().map(|z| z.norm_sqr()).sum::<f64>()
        } else {
            ChannelVector::new(h.to_vec(), self.config.power())
                .expect("validated channel")
                .mmse_alpha(&e)
        }
    }

    fn link(&self, rng: &mut Stream) -> Result<Link, SimError> {
        let (h, a, network_rate) = match &self.fixed {
            Some(f) => (f.h.clone(), f.a.clone(), f.network_rate),
            None => {
                let (h, _) = draw_channel(self.config.users, self.config.users, rng);
                let f = fixed_link(
                    h,
                    &self.ring,
                    &self.ideal,
                    self.config.power(),
                    self.config.search,
                )?;
                (f.h, f.a, f.network_rate)
            }
        };
        let alpha = h
            .iter()
            .zip(&a)
            .map(|(hm, am)| self.alpha(hm, am))
            .collect();
        Ok(Link {
            h,
            a,
            alpha,
            network_rate,
        })
    }

    /// Runs trial `index`. With `decode` false only the effective noise is
    /// measured.
    pub fn trial(&self, index: usize, decode: bool) -> Result<E2ETrialResult, SimError> {
        let cfg = &self.config;
        let nc = &self.nested;
        let p = cfg.p;
        let n = cfg.block_len;
        let s = nc.scale();
        let mut rng = rng::stream(cfg.seed, index as u64);
        let link = self.link(&mut rng)?;

        let k = cfg.users;
        let msg_len = nc.message_len();
        let w: Vec<Vec<u64>> = (0..k)
            .map(|_| {
                (0..msg_len)
                    .map(|_| (rng::uniform(&mut rng) * p as f64) as u64)
                    .collect()
            })
            .collect();
        let t: Vec<LatticePoint> = w
            .iter()
            .map(|wk| nc.codeword(wk))
            .collect::<Result<_, _>>()?;
        let u: Vec<Vec<Complex64>> = (0..k)
            .map(|_| nc.mod_coarse(&nc.coarse().sample_box(&mut rng)))
            .collect::<Result<_, _>>()?;
        let x: Vec<Vec<Complex64>> = t
            .iter()
            .zip(&u)
            .map(|(tk, uk)| {
                let shifted: Vec<Complex64> =
                    tk.embed(s).iter().zip(uk).map(|(a, b)| a - b).collect();
                nc.mod_coarse(&shifted)
            })
            .collect::<Result<_, _>>()?;
        let tx_power = x
            .iter()
            .map(|xk| xk.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64)
            .sum::<f64>()
            / k as f64;

        let mut decoded = Vec::with_capacity(k);
        let mut truth = Vec::with_capacity(k);
        let mut combination = Vec::with_capacity(k);
        let mut noise_power = Vec::with_capacity(k);
        let mut error = None;
        for m in 0..k {
            let (hm, am, alpha) = (&link.h[m], &link.a[m], link.alpha[m]);
            let z: Vec<Complex64> = (0..n)
                .map(|_| {
                    let v = rng::complex_normal(&mut rng, 1.0);
                    if cfg.noiseless {
                        Complex64::new(0.0, 0.0)
                    } else {
                        v
                    }
                })
                .collect();
            let mut y_scaled = vec![Complex64::new(0.0, 0.0); n];
            let mut z_eq = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                let mut y = z[i];
                z_eq[i] = alpha * z[i];
                let mut back = Complex64::new(0.0, 0.0);
                for kk in 0..k {
                    let a = am[kk].embed();
                    y += hm[kk] * x[kk][i];
                    z_eq[i] += (alpha * hm[kk] - a) * x[kk][i];
                    back += a * u[kk][i];
                }
                y_scaled[i] = alpha * y + back;
            }
            noise_power.push(z_eq.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64);

            let b: Vec<u64> = am
                .iter()
                .map(|q| self.ideal.sigma_raw(q.a, q.b).value())
                .collect();
            truth.push(
                (0..msg_len)
                    .map(|j| {
                        (0..k).fold(0u64, |acc, kk| {
                            (acc + crate::field::mul_mod(b[kk], w[kk][j], p)) % p
                        })
                    })
                    .collect(),
            );
            let mut lattice_sum = LatticePoint::zero(&self.ring, n);
            for kk in 0..k {
                lattice_sum = lattice_sum.add(&t[kk].scale_by(am[kk]));
            }
            combination.push(nc.message_of(&lattice_sum)?);

            if decode {
                match nc.fine().decode_nearest(&y_scaled, f64::INFINITY) {
                    Ok(d) => decoded.push(Some(nc.message_of(&d.point)?)),
                    Err(e) => {
                        error.get_or_insert_with(|| e.to_string());
                        decoded.push(None);
                    }
                }
            }
        }
        let success = decode
            && decoded
                .iter()
                .zip(&truth)
                .all(|(d, tr)| d.as_ref() == Some(tr));
        Ok(E2ETrialResult {
            trial: index,
            success,
            decoded,
            truth,
            combination,
            noise_power,
            tx_power,
            network_rate: link.network_rate,
            error,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E2EReport {
    pub config: E2EConfig,
    pub generator: Vec<Vec<u64>>,
    pub ideal: String,
    pub prime_kind: PrimeKind,
    pub design_rate: f64,
    pub gamma: f64,
    pub gain: f64,
    /// Network rate of the fixed channel, if there is one.
    pub network_rate: Option<f64>,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_tx_power: f64,
    #[serde(skip)]
    pub records: Vec<E2ETrialResult>,
}

impl E2EReport {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn run_e2e(cfg: &E2EConfig) -> Result<E2EReport, SimError> {
    let setup = prepare(cfg)?;
    let records: Vec<E2ETrialResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| setup.trial(i, true))
        .collect::<Result<_, _>>()?;
    let successes = records.iter().filter(|r| r.success).count();
    let (mean_tx_power, _) = mean_stderr(&records.iter().map(|r| r.tx_power).collect::<Vec<_>>());
    let fine = setup.nested.fine();
    Ok(E2EReport {
        config: cfg.clone(),
        generator: fine.code().generator().to_rows(),
        ideal: setup.ideal.to_string(),
        prime_kind: setup.ideal.kind(),
        design_rate: setup.nested.design_rate(),
        gamma: fine.gamma(),
        gain: setup.gain,
        network_rate: setup.fixed.as_ref().map(|f| f.network_rate),
        trials: cfg.trials,
        successes,
        success_rate: successes as f64 / cfg.trials as f64,
        mean_tx_power,
        records,
    })
}

/// Measured and predicted effective noise per relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseStat {
    pub relay: usize,
    pub measured: f64,
    pub stderr: f64,
    /// `σ_z²|α|² + P‖αh − a‖²`; for the MMSE `α` this is
    /// `P(‖a‖² − P|hᴴa|²/(1 + P‖h‖²))`.
    pub analytic: f64,
}

/// Effective noise power over `trials` transmissions on a fixed channel.
pub fn effective_noise_stats(setup: &E2ESetup, trials: usize) -> Result<Vec<NoiseStat>, SimError> {
    let link = setup
        .fixed
        .as_ref()
        .ok_or_else(|| SimError::Config("noise statistics need a fixed channel".into()))?;
    let samples: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| setup.trial(i, false).map(|r| r.noise_power))
        .collect::<Result<_, _>>()?;
    let power = setup.config.power();
    let noise_var = if setup.config.noiseless { 0.0 } else { 1.0 };
    Ok((0..setup.config.users)
        .map(|m| {
            let xs: Vec<f64> = samples.iter().map(|s| s[m]).collect();
            let (measured, stderr) = mean_stderr(&xs);
            let alpha = setup.alpha(&link.h[m], &link.a[m]);
            let misfit: f64 = link.h[m]
                .iter()
                .zip(&link.a[m])
                .map(|(h, a)| (alpha * h - a.embed()).norm_sqr())
                .sum();
            NoiseStat {
                relay: m,
                measured,
                stderr,
                analytic: noise_var * alpha.norm_sqr() + power * misfit,
            }
        })
        .collect())
}
