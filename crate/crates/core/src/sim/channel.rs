use num_complex::Complex64;

use crate::rate::{ChannelVector, RateError};
use crate::rng::{self, Stream};

/// Row `m` is relay `m`'s channel from all users.
pub type ChannelMatrix = Vec<Vec<Complex64>>;

/// Draws with a row norm below this are discarded.
pub const MIN_ROW_NORM: f64 = 1e-6;

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `M × K` matrix of i.i.d. `CN(0, 1)` entries.
pub fn gen_channel(users: usize, relays: usize, rng: &mut Stream) -> ChannelMatrix {
    (0..relays)
        .map(|_| (0..users).map(|_| rng::complex_normal(rng, 1.0)).collect())
        .collect()
}

/// Like [`gen_channel`], redrawing until every row is usable. Returns the
/// matrix and the number of rejected draws.
pub fn draw_channel(users: usize, relays: usize, rng: &mut Stream) -> (ChannelMatrix, u64) {
    let mut redraws = 0;
    loop {
        let h = gen_channel(users, relays, rng);
        let ok = h
            .iter()
            .all(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() >= MIN_ROW_NORM);
        if ok {
            return (h, redraws);
        }
        redraws += 1;
    }
}

pub fn relays_at(h: &ChannelMatrix, power: f64) -> Result<Vec<ChannelVector>, RateError> {
    h.iter()
        .map(|row| ChannelVector::new(row.clone(), power))
        .collect()
}
