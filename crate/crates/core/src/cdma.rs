//! Overloaded CDMA scenario generator.
//!
//! `K` nodes spread BPSK symbols with random ±1/√N chip sequences, each
//! through its own real Rayleigh channel of `L_h` taps. The composite
//! matrix `T` has one column per node, the full convolution of its
//! spreading sequence with its channel, so `y = T x + w` has
//! `N + L_h − 1` rows.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linsys::LinearSystem;
use crate::model::AugmentedAlphabet;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CdmaConfig {
    /// `K`.
    pub num_nodes: usize,
    /// `N`, chips per symbol.
    pub spreading_gain: usize,
    /// `L_h`.
    pub channel_taps: usize,
    pub activity_prob: f64,
    /// Per-symbol SNR in dB; `+∞` disables noise.
    pub snr_db: f64,
    pub alphabet: AugmentedAlphabet,
}

impl Default for CdmaConfig {
    fn default() -> Self {
        CdmaConfig {
            num_nodes: 20,
            spreading_gain: 5,
            channel_taps: 4,
            activity_prob: 0.2,
            snr_db: 10.0,
            alphabet: AugmentedAlphabet::bpsk(),
        }
    }
}

impl CdmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_nodes == 0 || self.spreading_gain == 0 || self.channel_taps == 0 {
            return Err(Error::InvalidParameter(
                "num_nodes, spreading_gain and channel_taps must be positive".into(),
            ));
        }
        if !(self.activity_prob > 0.0 && self.activity_prob < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "activity probability must lie in (0, 1), got {}",
                self.activity_prob
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!("invalid SNR {}", self.snr_db)));
        }
        Ok(())
    }

    /// `M = N + L_h − 1`.
    pub fn observation_dim(&self) -> usize {
        self.spreading_gain + self.channel_taps - 1
    }

    pub fn noise_var(&self) -> f64 {
        noise_var_for_snr(self.snr_db)
    }
}

/// `σ² = 10^(−SNR/10)`, zero for `SNR = +∞`.
pub fn noise_var_for_snr(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// One realisation of the CDMA uplink.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub system: LinearSystem,
    pub x_true: Vec<f64>,
    pub noise_var: f64,
}

/// N×K chips, i.i.d. uniform on `{−1/√N, +1/√N}`.
pub fn draw_spreading<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Matrix {
    let amp = 1.0 / (n as f64).sqrt();
    Matrix::from_fn(n, k, |_, _| if rng.random_bool(0.5) { amp } else { -amp })
}

/// L_h×K taps, i.i.d. `N(0, 1/L_h)`.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, taps: usize, k: usize) -> Matrix {
    let sd = 1.0 / (taps as f64).sqrt();
    Matrix::from_fn(taps, k, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// Column-wise full linear convolution of spreading and channel.
pub fn build_t(spreading: &Matrix, channel: &Matrix) -> Result<Matrix> {
    if spreading.cols() != channel.cols() {
        return Err(Error::DimensionMismatch {
            expected: spreading.cols(),
            found: channel.cols(),
        });
    }
    let (n, k) = spreading.shape();
    let taps = channel.rows();
    let mut t = Matrix::zeros(n + taps - 1, k);
    for col in 0..k {
        for i in 0..n {
            let s = spreading[(i, col)];
            for l in 0..taps {
                t[(i + l, col)] += s * channel[(l, col)];
            }
        }
    }
    Ok(t)
}

/// Draws spreading, channel, source vector and noise, in that order.
pub fn draw_frame<R: Rng + ?Sized>(rng: &mut R, config: &CdmaConfig) -> Result<Frame> {
    config.validate()?;
    let k = config.num_nodes;
    let spreading = draw_spreading(rng, config.spreading_gain, k);
    let channel = draw_channel(rng, config.channel_taps, k);
    let t = build_t(&spreading, &channel)?;

    let symbols = config.alphabet.data_symbols();
    let x_true: Vec<f64> = (0..k)
        .map(|_| {
            if rng.random_bool(config.activity_prob) {
                symbols[rng.random_range(0..symbols.len())]
            } else {
                0.0
            }
        })
        .collect();

    let noise_var = config.noise_var();
    let sd = noise_var.sqrt();
    let mut y = t.mul_vec(&x_true);
    if noise_var > 0.0 {
        for v in &mut y {
            *v += sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(Frame {
        system: LinearSystem::new(t, y)?,
        x_true,
        noise_var,
    })
}
