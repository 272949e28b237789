//! Donoho–Johnstone test functions, SNR-calibrated noise, and synthetic
//! coefficient vectors drawn from the mixture prior.
//!
//! Functions are sampled on `x_i = (i − 0.5)/n`, `i = 1..n`, and are not
//! rescaled; the noise level is set from each function's own standard
//! deviation as `σ = sd(f)/SNR`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dwt::dyadic_levels;
use crate::error::{Error, Result};
use crate::prior::BetaMixturePrior;

const KNOTS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCKS_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMPS_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMPS_WIDTHS: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    Bumps,
    Blocks,
    Doppler,
    Heavisine,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [
        TestFunction::Bumps,
        TestFunction::Blocks,
        TestFunction::Doppler,
        TestFunction::Heavisine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Bumps => "bumps",
            TestFunction::Blocks => "blocks",
            TestFunction::Doppler => "doppler",
            TestFunction::Heavisine => "heavisine",
        }
    }

    /// Value at `t ∈ [0, 1]`.
    pub fn eval(self, t: f64) -> f64 {
        match self {
            TestFunction::Blocks => KNOTS
                .iter()
                .zip(BLOCKS_HEIGHTS)
                .map(|(&k, h)| h * (1.0 + sgn(t - k)) / 2.0)
                .sum(),
            TestFunction::Bumps => KNOTS
                .iter()
                .zip(BUMPS_HEIGHTS)
                .zip(BUMPS_WIDTHS)
                .map(|((&k, h), w)| h * (1.0 + ((t - k) / w).abs()).powi(-4))
                .sum(),
            TestFunction::Heavisine => 4.0 * (4.0 * PI * t).sin() - sgn(t - 0.3) - sgn(0.72 - t),
            TestFunction::Doppler => (t * (1.0 - t)).max(0.0).sqrt() * (2.0 * PI * 1.05 / (t + 0.05)).sin(),
        }
    }

    /// Samples on the midpoint grid `(i − 0.5)/n`.
    pub fn sample(self, n: usize) -> Result<Vec<f64>> {
        dyadic_levels(n)?;
        Ok(grid(n).map(|t| self.eval(t)).collect())
    }
}

/// Samples the named function at `n` points.
pub fn evaluate_test_function(name: &str, n: usize) -> Result<Vec<f64>> {
    name.parse::<TestFunction>()?.sample(n)
}

/// `sign` with `sgn(0) = 0`.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sampling abscissae `(i − 0.5)/n` for `i = 1..=n`.
pub fn grid(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| (i as f64 - 0.5) / n as f64)
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bumps" => Ok(TestFunction::Bumps),
            "blocks" => Ok(TestFunction::Blocks),
            "doppler" => Ok(TestFunction::Doppler),
            "heavisine" => Ok(TestFunction::Heavisine),
            other => Err(Error::param(format!(
                "unknown test function '{other}' (expected bumps, blocks, doppler or heavisine)"
            ))),
        }
    }
}

/// Sample standard deviation with the `n − 1` divisor.
pub fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Affine copy of `xs` with the same mean and sample sd `sd`.
pub fn rescale_to_sd(xs: &[f64], sd: f64) -> Result<Vec<f64>> {
    let current = sample_sd(xs);
    if !(current > 0.0) {
        return Err(Error::Degenerate("cannot rescale a constant signal".into()));
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let k = sd / current;
    Ok(xs.iter().map(|x| mean + k * (x - mean)).collect())
}

/// Seeded generator used throughout the crate.
pub fn rng_for_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisySignal {
    pub clean: Vec<f64>,
    pub noisy: Vec<f64>,
    pub sigma: f64,
    pub snr: f64,
    pub seed: u64,
}

impl NoisySignal {
    /// `noisy − clean`.
    pub fn noise(&self) -> Vec<f64> {
        self.noisy.iter().zip(&self.clean).map(|(y, f)| y - f).collect()
    }
}

/// `σ = sd(clean)/snr`, `noisy = clean + N(0, σ²)`. An infinite `snr`
/// yields a noise-free copy.
pub fn add_noise(clean: &[f64], snr: f64, seed: u64) -> Result<NoisySignal> {
    if !(snr > 0.0) {
        return Err(Error::param(format!("SNR must be positive, got {snr}")));
    }
    let sd = sample_sd(clean);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("clean signal is constant; SNR is undefined".into()));
    }
    let sigma = sd / snr;
    let mut rng = rng_for_seed(seed);
    let noisy = clean
        .iter()
        .map(|&f| {
            let z: f64 = rng.sample(StandardNormal);
            f + sigma * z
        })
        .collect();
    Ok(NoisySignal {
        clean: clean.to_vec(),
        noisy,
        sigma,
        snr,
        seed,
    })
}

/// Coefficient-domain data: `θ` i.i.d. from the prior, `σ = sd(θ)/snr`,
/// `d = θ + N(0, σ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorCoefficients {
    pub theta: Vec<f64>,
    pub d: Vec<f64>,
    pub sigma: f64,
    /// Number of θ redraws needed because a draw had zero spread.
    pub redraws: usize,
}

const MAX_REDRAWS: usize = 100;

pub fn generate_prior_coefficients(prior: &BetaMixturePrior, n: usize, snr: f64, seed: u64) -> Result<PriorCoefficients> {
    dyadic_levels(n)?;
    if !(snr > 0.0) {
        return Err(Error::param(format!("SNR must be positive, got {snr}")));
    }
    let mut rng = rng_for_seed(seed);
    let mut redraws = 0;
    let theta = loop {
        let theta = prior.sample(&mut rng, n);
        if sample_sd(&theta) > 0.0 {
            break theta;
        }
        redraws += 1;
        log::warn!("prior draw with zero spread (seed {seed}); redrawing");
        if redraws >= MAX_REDRAWS {
            return Err(Error::Degenerate(format!(
                "{MAX_REDRAWS} consecutive prior draws had zero spread; alpha = {} is too close to 1 for n = {n}",
                prior.alpha()
            )));
        }
    };
    let sigma = sample_sd(&theta) / snr;
    let d = theta
        .iter()
        .map(|&t| {
            let z: f64 = rng.sample(StandardNormal);
            t + sigma * z
        })
        .collect();
    Ok(PriorCoefficients { theta, d, sigma, redraws })
}
