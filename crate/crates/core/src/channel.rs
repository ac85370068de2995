//! System parameters, reproducible random streams and i.i.d. Rayleigh user
//! channels.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{ComplexVector, C64};

/// Static configuration shared by simulation and analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    /// Number of users `K`.
    pub users: usize,
    /// Transmit antennas `n_T`; also the number of scheduled users.
    pub antennas: usize,
    /// Feedback bits per user `B`.
    pub feedback_bits: u32,
    /// Total transmit power `P` (linear; unit noise variance).
    pub power: f64,
    /// Square QAM order `M`.
    pub constellation_order: u32,
}

impl SystemParams {
    pub fn new(
        users: usize,
        antennas: usize,
        feedback_bits: u32,
        power: f64,
        constellation_order: u32,
    ) -> Result<Self> {
        let p = Self { users, antennas, feedback_bits, power, constellation_order };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`SystemParams::new`] with the power given in dB.
    pub fn with_power_db(
        users: usize,
        antennas: usize,
        feedback_bits: u32,
        power_db: f64,
        constellation_order: u32,
    ) -> Result<Self> {
        Self::new(users, antennas, feedback_bits, db_to_linear(power_db), constellation_order)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users < 1 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if self.antennas < 2 {
            return Err(Error::InvalidParameter("n_T must be at least 2".into()));
        }
        if self.feedback_bits < 1 {
            return Err(Error::InvalidParameter("B must be at least 1".into()));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::InvalidParameter(format!("P must be positive, got {}", self.power)));
        }
        let m = self.constellation_order;
        let side = integer_sqrt(m);
        if m < 4 || side * side != m {
            return Err(Error::InvalidParameter(format!("M must be a square >= 4, got {m}")));
        }
        Ok(())
    }

    /// Quantization cell parameter `δ = 2^{−B/(n_T−1)}`.
    pub fn delta(&self) -> f64 {
        (-f64::from(self.feedback_bits) / (self.antennas as f64 - 1.0)).exp2()
    }

    /// Support threshold `1/δ − 1` of the closed-form SINR laws.
    pub fn x_min(&self) -> f64 {
        1.0 / self.delta() - 1.0
    }

    /// Power normalization `κ = (M/(M−1)) L` with `L = n_T`.
    pub fn kappa(&self) -> f64 {
        let m = f64::from(self.constellation_order);
        m / (m - 1.0) * self.antennas as f64
    }

    /// Effective SNR coefficient `φ = P/κ = ((M−1)/M)(P/n_T)`.
    pub fn phi(&self) -> f64 {
        self.power / self.kappa()
    }

    /// Per-antenna power `ϱ = P/n_T`.
    pub fn rho_per_antenna(&self) -> f64 {
        self.power / self.antennas as f64
    }

    pub fn codebook_size(&self) -> u64 {
        1u64 << self.feedback_bits.min(63)
    }

    pub fn with_users(mut self, users: usize) -> Self {
        self.users = users;
        self
    }

    pub fn with_bits(mut self, bits: u32) -> Self {
        self.feedback_bits = bits;
        self
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

fn integer_sqrt(m: u32) -> u32 {
    let mut s = f64::from(m).sqrt() as u32;
    while s * s > m {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= m {
        s += 1;
    }
    s
}

/// A reproducible family of random streams.
///
/// The ChaCha key is built from `(seed, stream)` and every Monte Carlo trial
/// gets its own ChaCha stream, so draws depend only on `(seed, stream,
/// trial)` and never on scheduling order between worker threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// The generator for one trial.
    pub fn rng(&self, trial: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream.to_le_bytes());
        key[16..24].copy_from_slice(b"thplab\0\0");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(trial);
        rng
    }

    /// A distinct stream family derived from this one.
    pub fn child(&self, id: u64) -> Self {
        Self { seed: self.seed, stream: splitmix64(self.stream ^ splitmix64(id.wrapping_add(1))) }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform on `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Circularly-symmetric `CN(0, 1)` draw by Box–Muller.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let r = (-open_unit(rng).ln()).sqrt();
    let theta = 2.0 * PI * rng.gen::<f64>();
    C64::new(r * theta.cos(), r * theta.sin())
}

/// `Gamma(k, 1)` for integer shape as a sum of unit exponentials.
pub fn gamma_integer<R: Rng + ?Sized>(rng: &mut R, shape: usize) -> f64 {
    (0..shape).map(|_| -open_unit(rng).ln()).sum()
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> ComplexVector {
    ComplexVector::from_vec_unchecked((0..len).map(|_| complex_gaussian(rng)).collect())
}

/// Isotropically distributed unit vector in `C^len`.
pub fn isotropic_unit<R: Rng + ?Sized>(rng: &mut R, len: usize) -> ComplexVector {
    loop {
        let g = gaussian_vector(rng, len);
        if let Ok(u) = g.normalized() {
            return u;
        }
    }
}

/// Per-user channel vectors `h_k` and their squared norms `ρ_k²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub channels: Vec<ComplexVector>,
    pub norms_sqr: Vec<f64>,
}

impl ChannelSet {
    pub fn from_channels(channels: Vec<ComplexVector>) -> Self {
        let norms_sqr = channels.iter().map(ComplexVector::norm_sqr).collect();
        Self { channels, norms_sqr }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }
}

/// Draws `K` i.i.d. `CN(0, I_{n_T})` channels from the given generator.
pub fn draw_channels_with<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> ChannelSet {
    let channels = (0..params.users).map(|_| gaussian_vector(rng, params.antennas)).collect();
    ChannelSet::from_channels(channels)
}

/// Draws the channels of one trial of a stream.
pub fn draw_channels(params: &SystemParams, stream: &RngStream, trial: u64) -> ChannelSet {
    draw_channels_with(params, &mut stream.rng(trial))
}
