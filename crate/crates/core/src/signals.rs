//! Donoho–Johnstone test functions and noise injection.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::sign;
use crate::wavelet::Signal;

// Knot positions, heights and widths as tabulated by Donoho and Johnstone (1994)
// and reproduced in WaveLab's MakeSignal.
const KNOTS: [f64; 11] = [
    0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DjSignal {
    Bumps,
    Blocks,
    Doppler,
    Heavisine,
}

impl DjSignal {
    pub const ALL: [DjSignal; 4] = [
        DjSignal::Bumps,
        DjSignal::Blocks,
        DjSignal::Doppler,
        DjSignal::Heavisine,
    ];

    /// Value at `x ∈ (0, 1]`.
    pub fn eval(self, x: f64) -> f64 {
        match self {
            DjSignal::Blocks => KNOTS
                .iter()
                .zip(BLOCK_HEIGHTS)
                .map(|(t, h)| h * (1.0 + sign(x - t)) / 2.0)
                .sum(),
            DjSignal::Bumps => KNOTS
                .iter()
                .zip(BUMP_HEIGHTS)
                .zip(BUMP_WIDTHS)
                .map(|((t, h), w)| h * (1.0 + ((x - t) / w).abs()).powi(-4))
                .sum(),
            DjSignal::Doppler => (x * (1.0 - x)).sqrt() * (2.0 * PI * 1.05 / (x + 0.05)).sin(),
            DjSignal::Heavisine => 4.0 * (4.0 * PI * x).sin() - sign(x - 0.3) - sign(0.72 - x),
        }
    }
}

impl fmt::Display for DjSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DjSignal::Bumps => "Bumps",
            DjSignal::Blocks => "Blocks",
            DjSignal::Doppler => "Doppler",
            DjSignal::Heavisine => "Heavisine",
        })
    }
}

impl FromStr for DjSignal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bumps" => Ok(DjSignal::Bumps),
            "blocks" => Ok(DjSignal::Blocks),
            "doppler" => Ok(DjSignal::Doppler),
            "heavisine" | "heavi-sine" => Ok(DjSignal::Heavisine),
            _ => Err(Error::Argument(format!(
                "unknown test signal `{s}` (expected Bumps, Blocks, Doppler or Heavisine)"
            ))),
        }
    }
}

impl TryFrom<String> for DjSignal {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DjSignal> for String {
    fn from(s: DjSignal) -> String {
        s.to_string()
    }
}

/// Samples at `x_i = i/n`, `i = 1..n`.
pub fn dj_signal(name: DjSignal, n: usize) -> Result<Signal> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Shape(format!(
            "signal length {n} is not a power of two >= 2"
        )));
    }
    Signal::new((1..=n).map(|i| name.eval(i as f64 / n as f64)).collect())
}

/// Population standard deviation.
pub fn population_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Rescales `signal` to population sd `target`.
pub fn rescale_to_sd(signal: &Signal, target: f64) -> Result<Signal> {
    let sd = population_sd(signal.samples());
    if sd == 0.0 {
        return Err(Error::DegenerateSignal(
            "cannot rescale a constant signal".into(),
        ));
    }
    Signal::new(signal.samples().iter().map(|v| v * target / sd).collect())
}

/// Adds `N(0, σ²)` noise with `σ = sd(signal) / snr`; returns the noisy
/// signal and `σ`.
pub fn add_noise(signal: &Signal, snr: f64, rng: &mut impl Rng) -> Result<(Signal, f64)> {
    if !(snr > 0.0) {
        return Err(Error::Argument(format!("snr={snr} must be positive")));
    }
    let sd = population_sd(signal.samples());
    if sd == 0.0 {
        return Err(Error::DegenerateSignal(
            "constant signal has no defined SNR".into(),
        ));
    }
    let sigma = sd / snr;
    let noisy = signal
        .samples()
        .iter()
        .map(|v| {
            let z: f64 = rng.sample(StandardNormal);
            v + sigma * z
        })
        .collect();
    Ok((Signal::new(noisy)?, sigma))
}

/// `(1/n) Σ (f̂_i − f_i)²`.
pub fn mse(estimate: &Signal, truth: &Signal) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Shape(format!(
            "lengths differ: {} vs {}",
            estimate.len(),
            truth.len()
        )));
    }
    let sum: f64 = estimate
        .samples()
        .iter()
        .zip(truth.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / estimate.len() as f64)
}
