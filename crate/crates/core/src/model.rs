//! The statistical law of mining.
//!
//! Block discovery by any fixed group of miners is a Poisson process: over a
//! window in which the group is expected to find `K` blocks, the number it
//! actually finds has mean `K` and standard deviation `√K`. Everything here is
//! pure; randomness always comes from an explicit generator so that replicates
//! running on different threads never share state.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Hash attempts represented by one unit of difficulty.
pub const HASHES_PER_DIFFICULTY: f64 = 4_294_967_296.0; // 2^32

/// Below this mean the Poisson sampler uses sequential inversion.
pub const INVERSION_CUTOFF: f64 = 30.0;

/// Hashes per second.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hashrate(f64);

impl Hashrate {
    pub fn new(hashes_per_sec: f64) -> Result<Self> {
        if !hashes_per_sec.is_finite() || hashes_per_sec < 0.0 {
            return Err(Error::arg(
                "hashrate",
                hashes_per_sec,
                "must be finite and non-negative",
            ));
        }
        Ok(Hashrate(hashes_per_sec))
    }

    pub fn terahashes(th: f64) -> Result<Self> {
        Self::new(th * 1e12)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Hashrate {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Hashrate::new(v)
    }
}

impl From<Hashrate> for f64 {
    fn from(h: Hashrate) -> f64 {
        h.0
    }
}

/// Network difficulty in the usual units: a block takes `difficulty × 2^32`
/// hash attempts in expectation, a difficulty-1 share takes `2^32`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Difficulty(f64);

impl Difficulty {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 1.0 {
            return Err(Error::arg("difficulty", value, "must be finite and >= 1"));
        }
        Ok(Difficulty(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Success probability of a single hash attempt.
    pub fn block_probability_per_hash(self) -> f64 {
        1.0 / (self.0 * HASHES_PER_DIFFICULTY)
    }
}

impl TryFrom<f64> for Difficulty {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Difficulty::new(v)
    }
}

impl From<Difficulty> for f64 {
    fn from(d: Difficulty) -> f64 {
        d.0
    }
}

/// Poisson law of the number of blocks found: `stddev² == mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockCountDistribution {
    mean: f64,
    stddev: f64,
}

impl BlockCountDistribution {
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stddev(&self) -> f64 {
        self.stddev
    }

    pub fn variance(&self) -> f64 {
        self.mean
    }

    /// Standard deviation as a fraction of the mean; infinite at `K = 0`.
    pub fn relative_stddev(&self) -> f64 {
        self.stddev / self.mean
    }
}

/// Expected number of blocks found at hashrate `h` over `duration_secs`.
pub fn expected_blocks(h: Hashrate, d: Difficulty, duration_secs: f64) -> Result<f64> {
    if !duration_secs.is_finite() || duration_secs < 0.0 {
        return Err(Error::arg(
            "duration",
            duration_secs,
            "must be finite and non-negative",
        ));
    }
    Ok(h.value() * duration_secs / (d.value() * HASHES_PER_DIFFICULTY))
}

pub fn mining_distribution(k: f64) -> Result<BlockCountDistribution> {
    check_mean(k)?;
    Ok(BlockCountDistribution {
        mean: k,
        stddev: k.sqrt(),
    })
}

/// One Poisson(`k`) draw.
///
/// Sequential inversion below [`INVERSION_CUTOFF`], Hörmann's transformed
/// rejection (PTRS) at or above it. Both consume the generator in a fixed
/// pattern, so a seeded generator reproduces the same draws everywhere.
pub fn sample_block_count<R: Rng + ?Sized>(k: f64, rng: &mut R) -> Result<u64> {
    check_mean(k)?;
    if k == 0.0 {
        return Ok(0);
    }
    if k < INVERSION_CUTOFF {
        Ok(poisson_inversion(k, rng))
    } else {
        Ok(poisson_ptrs(k, rng))
    }
}

fn check_mean(k: f64) -> Result<()> {
    if !k.is_finite() || k < 0.0 {
        return Err(Error::arg(
            "expected blocks",
            k,
            "must be finite and non-negative",
        ));
    }
    Ok(())
}

fn poisson_inversion<R: Rng + ?Sized>(k: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut n = 0u64;
    let mut p = (-k).exp();
    let mut cdf = p;
    // The tail beyond a few hundred terms is below f64 resolution for k < 30.
    while u > cdf && n < 1_000 {
        n += 1;
        p *= k / n as f64;
        cdf += p;
    }
    n
}

fn poisson_ptrs<R: Rng + ?Sized>(k: f64, rng: &mut R) -> u64 {
    let slam = k.sqrt();
    let loglam = k.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);

    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let n = ((2.0 * a / us + b) * u + k + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return n as u64;
        }
        if n < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -k + n * loglam - ln_gamma(n + 1.0);
        if lhs <= rhs {
            return n as u64;
        }
    }
}

/// Relative variance gap between `n` Bernoulli(`mu`) trials and the Poisson
/// law with the same mean: `(nμ − nμ(1−μ)) / nμ`, which is exactly `μ`.
pub fn binomial_poisson_gap(n: u64, mu: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("trials", 0.0, "must be at least 1"));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::arg("success probability", mu, "must be in (0, 1)"));
    }
    let n = n as f64;
    let poisson_var = n * mu;
    // nμ − nμ(1−μ), expanded to avoid cancellation at tiny μ.
    let excess = n * mu * mu;
    Ok(excess / poisson_var)
}
