//! Rayleigh-fading X-network channels, complex Gaussian noise and seeding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{condition_ratio, CMat, C64, SINGULAR_TOL};

/// Attempts before a run of singular draws is reported as degenerate.
pub const MAX_CHANNEL_ATTEMPTS: usize = 8;

/// Deterministic generator; the same seed always yields the same stream.
#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Generator for one Monte-Carlo trial; depends only on `(seed, stream, trial)`.
    pub fn for_trial(seed: u64, stream: u64, trial: u64) -> Self {
        SimRng::new(seed ^ mix64(mix64(stream.wrapping_add(0x5851_f42d_4c95_7f2d)) ^ trial))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One `CN(0, variance)` sample.
    pub fn complex_gaussian(&mut self, variance: f64) -> C64 {
        let s = (variance / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(&mut self.inner);
        let im: f64 = StandardNormal.sample(&mut self.inner);
        C64::new(s * re, s * im)
    }

    pub fn below(&mut self, n: usize) -> usize {
        use rand::Rng;
        self.inner.random_range(0..n)
    }
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The four `M x M` gains of the 2-transmitter 2-receiver network.
/// `h[i][j]` maps transmitter `i` to receiver `j` (zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub m: usize,
    pub h: [[CMat; 2]; 2],
}

impl ChannelRealization {
    pub fn new(h: [[CMat; 2]; 2]) -> Result<Self> {
        let m = h[0][0].nrows();
        for row in &h {
            for g in row {
                if g.shape() != (m, m) || m == 0 {
                    return Err(Error::DimensionMismatch(format!(
                        "channel block {:?}, expected {m}x{m}",
                        g.shape()
                    )));
                }
            }
        }
        Ok(ChannelRealization { m, h })
    }

    /// Gain from transmitter `tx` to receiver `rx` (zero-based).
    pub fn gain(&self, tx: usize, rx: usize) -> &CMat {
        &self.h[tx][rx]
    }

    pub fn is_nonsingular(&self) -> bool {
        self.h.iter().flatten().all(|g| matches!(condition_ratio(g), Ok(r) if r > SINGULAR_TOL))
    }
}

/// Matrix of i.i.d. `CN(0, variance)` entries.
pub fn awgn(rng: &mut SimRng, rows: usize, cols: usize, variance: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| rng.complex_gaussian(variance))
}

/// Draws i.i.d. `CN(0,1)` gains, redrawing when any block is numerically singular.
pub fn sample_channel(rng: &mut SimRng, m: usize) -> Result<ChannelRealization> {
    if m == 0 {
        return Err(Error::InvalidArgument("antenna count must be positive".into()));
    }
    for _ in 0..MAX_CHANNEL_ATTEMPTS {
        let mut draw = || awgn(rng, m, m, 1.0);
        let h = [[draw(), draw()], [draw(), draw()]];
        let ch = ChannelRealization { m, h };
        if ch.is_nonsingular() {
            return Ok(ch);
        }
    }
    Err(Error::ChannelDegenerate(format!(
        "{MAX_CHANNEL_ATTEMPTS} consecutive singular draws"
    )))
}
