//! Seeded random streams.
//!
//! Every Monte Carlo loop draws trial `i` from its own ChaCha stream
//! `(seed, i)`, so results do not depend on how trials are scheduled
//! across threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform in `[0, 1)`.
pub fn uniform(rng: &mut Stream) -> f64 {
    rng.random::<f64>()
}

/// Pair of independent standard normals by the Box-Muller transform.
pub fn normal_pair(rng: &mut Stream) -> (f64, f64) {
    // 1 - U lies in (0, 1], keeping the logarithm finite
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Circularly symmetric complex Gaussian with `E|z|² = variance`.
pub fn complex_normal(rng: &mut Stream, variance: f64) -> Complex64 {
    let (x, y) = normal_pair(rng);
    let s = (variance / 2.0).sqrt();
    Complex64::new(s * x, s * y)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = CompensatedSum::default();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut v = CompensatedSum::default();
    xs.iter().for_each(|&x| v.add((x - mean) * (x - mean)));
    let var = v.value() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
