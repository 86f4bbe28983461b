//! Monte Carlo simulation of the relay network.

mod channel;
mod e2e;
mod sweep;

pub use channel::{db_to_power, draw_channel, gen_channel, relays_at, ChannelMatrix, MIN_ROW_NORM};
pub use e2e::{
    calibrate_gain, effective_noise_stats, prepare, run_e2e, E2EChannel, E2EConfig, E2EReport,
    E2ESetup, E2ETrialResult, NoiseStat,
};
pub use sweep::{
    rate_sweep, ChannelMode, RateReport, RateRow, RingLabel, SweepConfig, TrialRecord,
};

use thiserror::Error;

use crate::ideal::IdealError;
use crate::lattice::LatticeError;
use crate::rate::RateError;
use crate::ring::RingError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Rate(#[from] RateError),
}
