use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{db_to_power, draw_channel, relays_at, ChannelMatrix};
use super::SimError;
use crate::rate::{select_matrix, SearchOptions};
use crate::ring::Ring;
use crate::rng::{self, mean_stderr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    Fixed,
    Rayleigh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub mode: ChannelMode,
    pub users: usize,
    pub snr_db: Vec<f64>,
    pub rings: Vec<i64>,
    pub trials: usize,
    pub seed: u64,
    /// Required in fixed mode.
    pub fixed_h: Option<ChannelMatrix>,
    pub search: SearchOptions,
    /// Keep one record per channel draw in the report.
    pub keep_trials: bool,
}

impl SweepConfig {
    fn validate(&self) -> Result<Vec<Ring>, SimError> {
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(SimError::Config(
                "SNR grid must be nonempty and finite".into(),
            ));
        }
        if self.rings.is_empty() {
            return Err(SimError::Config("ring list is empty".into()));
        }
        if self.trials == 0 {
            return Err(SimError::Config("trials must be at least 1".into()));
        }
        if self.users == 0 {
            return Err(SimError::Config("need at least one user".into()));
        }
        if self.mode == ChannelMode::Fixed {
            let h = self
                .fixed_h
                .as_ref()
                .ok_or_else(|| SimError::Config("fixed mode needs a channel matrix".into()))?;
            if h.len() != self.users || h.iter().any(|r| r.len() != self.users) {
                return Err(SimError::Config(format!(
                    "fixed channel must be {0}×{0}",
                    self.users
                )));
            }
        }
        Ok(self
            .rings
            .iter()
            .map(|&d| Ring::new(d))
            .collect::<Result<_, _>>()?)
    }
}

/// Row label: a ring's `d` or the adaptive choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RingLabel {
    Ring(i64),
    Adaptive,
}

impl fmt::Display for RingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingLabel::Ring(d) => write!(f, "{d}"),
            RingLabel::Adaptive => f.write_str("adaptive"),
        }
    }
}

impl From<RingLabel> for String {
    fn from(l: RingLabel) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for RingLabel {
    type Error = String;

    fn try_from(s: String) -> Result<RingLabel, String> {
        if s == "adaptive" {
            return Ok(RingLabel::Adaptive);
        }
        s.parse()
            .map(RingLabel::Ring)
            .map_err(|_| format!("bad ring label {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub snr_db: f64,
    pub ring_d: RingLabel,
    pub mean_rate: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Network rates of one channel draw at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub snr_db: f64,
    /// In the order of the configured rings.
    pub rates: Vec<f64>,
    pub adaptive: f64,
    pub adaptive_ring: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config: SweepConfig,
    pub results: Vec<RateRow>,
    /// Rayleigh draws rejected for a near-zero row.
    pub redraws: u64,
    /// Selections where the coefficient cap cut the search region.
    pub capped: u64,
    pub per_trial: Vec<TrialRecord>,
}

impl RateReport {
    pub fn row(&self, snr_db: f64, ring: RingLabel) -> Option<&RateRow> {
        self.results
            .iter()
            .find(|r| r.ring_d == ring && r.snr_db == snr_db)
    }

    pub const CSV_HEADER: &'static str = "snr_db,ring_d,mean_rate,stderr,trials";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.results {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.snr_db, r.ring_d, r.mean_rate, r.stderr, r.trials
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct DrawOutcome {
    /// `[snr][ring]` network rates.
    rates: Vec<Vec<f64>>,
    redraws: u64,
    capped: u64,
}

/// Average network rates per SNR and ring, plus the adaptive choice.
pub fn rate_sweep(cfg: &SweepConfig) -> Result<RateReport, SimError> {
    let rings = cfg.validate()?;
    let draws = match cfg.mode {
        ChannelMode::Fixed => 1,
        ChannelMode::Rayleigh => cfg.trials,
    };
    let outcomes: Vec<DrawOutcome> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let (h, redraws) = match cfg.mode {
                ChannelMode::Fixed => (cfg.fixed_h.clone().expect("validated"), 0),
                ChannelMode::Rayleigh => {
                    let mut s = rng::stream(cfg.seed, i as u64);
                    draw_channel(cfg.users, cfg.users, &mut s)
                }
            };
            let mut capped = 0;
            let mut rates = Vec::with_capacity(cfg.snr_db.len());
            for &db in &cfg.snr_db {
                let relays = relays_at(&h, db_to_power(db))?;
                let mut row = Vec::with_capacity(rings.len());
                for ring in &rings {
                    let sel = select_matrix(&relays, ring, cfg.search, None)?;
                    capped += u64::from(sel.capped);
                    row.push(sel.network_rate);
                }
                rates.push(row);
            }
            Ok(DrawOutcome {
                rates,
                redraws,
                capped,
            })
        })
        .collect::<Result<_, SimError>>()?;

    let mut results = Vec::new();
    let mut per_trial = Vec::new();
    for (si, &db) in cfg.snr_db.iter().enumerate() {
        let mut adaptive = Vec::with_capacity(draws);
        for (t, o) in outcomes.iter().enumerate() {
            let row = &o.rates[si];
            let best = (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b });
            adaptive.push(row[best]);
            if cfg.keep_trials {
                per_trial.push(TrialRecord {
                    trial: t,
                    snr_db: db,
                    rates: row.clone(),
                    adaptive: row[best],
                    adaptive_ring: rings[best].d(),
                });
            }
        }
        let (am, ase) = mean_stderr(&adaptive);
        for (ri, ring) in rings.iter().enumerate() {
            let xs: Vec<f64> = outcomes.iter().map(|o| o.rates[si][ri]).collect();
            let (m, se) = mean_stderr(&xs);
            assert!(am >= m - 1e-12, "adaptive mean below a single-ring mean");
            results.push(RateRow {
                snr_db: db,
                ring_d: RingLabel::Ring(ring.d()),
                mean_rate: m,
                stderr: se,
                trials: draws,
            });
        }
        results.push(RateRow {
            snr_db: db,
            ring_d: RingLabel::Adaptive,
            mean_rate: am,
            stderr: ase,
            trials: draws,
        });
    }
    let capped = outcomes.iter().map(|o| o.capped).sum();
    if capped > 0 {
        log::warn!(
            "coordinate cap {} bound in {capped} selections: those rates are best within cap",
            cfg.search.coord_cap
        );
    }
    Ok(RateReport {
        config: cfg.clone(),
        results,
        redraws: outcomes.iter().map(|o| o.redraws).sum(),
        capped,
        per_trial,
    })
}
