//! Statistical detection of withheld blocks.
//!
//! A miner or pool expected to find `K` blocks (from its share rate) finds a
//! Poisson(`K`) number of them, so a withholding deficit is only visible once
//! it is several `√K` wide. Tests are one-sided: withholding can only lower
//! the count.

mod audit;
mod dag;

use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::error::{Error, Result};
use crate::ids::PoolId;
use crate::sim::{BlockStatus, SimResult};
use crate::stats::normal_sf;

pub use audit::{consistency_audit, AuditReport, DEFAULT_AUDIT_TOLERANCE};
pub use dag::{
    analyze_dag, read_table_csv, write_table_csv, DagAnalysis, TableRow, WindowStats, TABLE_HEADER,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationWindow {
    pub expected_blocks: f64,
    pub observed_blocks: u64,
    pub label: String,
}

impl ObservationWindow {
    pub fn new(label: impl Into<String>, expected_blocks: f64, observed_blocks: u64) -> Self {
        ObservationWindow {
            expected_blocks,
            observed_blocks,
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Undetectable,
    Suspicious,
    Detected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Normal,
    ExactPoisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionThresholds {
    #[serde(default = "default_suspicious")]
    pub suspicious_z: f64,
    #[serde(default = "default_detected")]
    pub detected_z: f64,
    /// Below this expectation the exact Poisson tail replaces the normal one.
    #[serde(default = "default_exact_below")]
    pub exact_below: f64,
}

fn default_suspicious() -> f64 {
    2.0
}
fn default_detected() -> f64 {
    3.0
}
fn default_exact_below() -> f64 {
    30.0
}

impl Default for DetectionThresholds {
    fn default() -> Self {
        DetectionThresholds {
            suspicious_z: default_suspicious(),
            detected_z: default_detected(),
            exact_below: default_exact_below(),
        }
    }
}

impl DetectionThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.suspicious_z > 0.0 && self.detected_z >= self.suspicious_z) {
            return Err(Error::config(
                "detection",
                "need 0 < suspicious_z <= detected_z",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub label: String,
    pub expected_blocks: f64,
    pub observed_blocks: u64,
    /// Deficit in units of `√K`.
    pub z_score: f64,
    /// One-sided `P(X ≤ observed)` under honest mining.
    pub p_value: f64,
    pub method: TailMethod,
    pub verdict: Verdict,
    /// Smallest withheld fraction whose expected deficit reaches the detection
    /// threshold at this `K`.
    pub min_detectable_withhold_fraction: f64,
}

pub fn z_test(w: &ObservationWindow) -> Result<DetectionReport> {
    z_test_with(w, &DetectionThresholds::default())
}

pub fn z_test_with(w: &ObservationWindow, t: &DetectionThresholds) -> Result<DetectionReport> {
    t.validate()?;
    let k = w.expected_blocks;
    if !k.is_finite() || k < 0.0 {
        return Err(Error::arg(
            "expected blocks",
            k,
            "must be finite and non-negative",
        ));
    }
    if k == 0.0 {
        if w.observed_blocks > 0 {
            return Err(Error::ZeroExpectation {
                observed: w.observed_blocks,
            });
        }
        return Err(Error::arg("expected blocks", k, "must be positive"));
    }
    let sd = k.sqrt();
    let z = (k - w.observed_blocks as f64) / sd;

    let (p_value, method, verdict) = if k < t.exact_below {
        let p = Poisson::new(k)
            .map_err(|_| Error::arg("expected blocks", k, "not a valid Poisson mean"))?
            .cdf(w.observed_blocks);
        let verdict = if p <= normal_sf(t.detected_z) {
            Verdict::Detected
        } else if p <= normal_sf(t.suspicious_z) {
            Verdict::Suspicious
        } else {
            Verdict::Undetectable
        };
        (p, TailMethod::ExactPoisson, verdict)
    } else {
        let verdict = if z >= t.detected_z {
            Verdict::Detected
        } else if z >= t.suspicious_z {
            Verdict::Suspicious
        } else {
            Verdict::Undetectable
        };
        (normal_sf(z), TailMethod::Normal, verdict)
    };

    Ok(DetectionReport {
        label: w.label.clone(),
        expected_blocks: k,
        observed_blocks: w.observed_blocks,
        z_score: z,
        p_value,
        method,
        verdict,
        min_detectable_withhold_fraction: (t.detected_z / sd).min(1.0),
    })
}

/// Expected blocks needed before a withheld fraction `w` produces a deficit of
/// `z_required` standard deviations: `(z / w)²`.
pub fn min_blocks_to_detect(withhold_fraction: f64, z_required: f64) -> Result<f64> {
    if !(withhold_fraction > 0.0 && withhold_fraction <= 1.0) {
        return Err(Error::arg(
            "withhold fraction",
            withhold_fraction,
            "must be in (0, 1]",
        ));
    }
    if z_required.is_nan() || z_required <= 0.0 {
        return Err(Error::arg("z", z_required, "must be positive"));
    }
    Ok((z_required / withhold_fraction).powi(2))
}

/// Factor by which the relative standard deviation, and with it the smallest
/// detectable withheld fraction, shrinks when mining events become
/// `rate_multiplier` times more frequent over the same wall time.
pub fn detectability_gain(rate_multiplier: f64) -> Result<f64> {
    if rate_multiplier.is_nan() || rate_multiplier <= 0.0 {
        return Err(Error::arg(
            "rate multiplier",
            rate_multiplier,
            "must be positive",
        ));
    }
    Ok(rate_multiplier.sqrt())
}

/// One observation window per pool: expected blocks from submitted shares,
/// observed blocks from the pool's published main-chain blocks.
pub fn pool_windows(result: &SimResult) -> Vec<ObservationWindow> {
    result
        .pools
        .iter()
        .map(|(id, ledger)| {
            ObservationWindow::new(
                id.as_str(),
                ledger.total_shares() as f64 / result.shares_per_block as f64,
                ledger.blocks_found,
            )
        })
        .collect()
}

/// One window per member of `pool`: expected blocks from the member's shares,
/// observed blocks it found on the main chain.
pub fn member_windows(result: &SimResult, pool: &PoolId) -> Vec<ObservationWindow> {
    let Some(ledger) = result.pools.get(pool) else {
        return Vec::new();
    };
    let mut found = vec![0u64; result.miners.len()];
    for b in &result.dag {
        if let (BlockStatus::Main, Some(o)) = (b.status, b.owner) {
            found[o as usize] += 1;
        }
    }
    result
        .miners
        .iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let shares = *ledger.shares.get(&m.id)?;
            Some(ObservationWindow::new(
                m.id.as_str(),
                shares as f64 / result.shares_per_block as f64,
                found[i],
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_miner_cannot_see_attack() {
        let r = z_test(&ObservationWindow::new("miner", 18.0, 16)).unwrap();
        assert!((r.z_score - 2.0 / 18f64.sqrt()).abs() < 1e-12);
        assert!((r.z_score - 0.471).abs() < 1e-3);
        assert_eq!(r.verdict, Verdict::Undetectable);
        assert_eq!(r.method, TailMethod::ExactPoisson);
        assert!((r.p_value - 0.375_050_353).abs() < 1e-6, "{}", r.p_value);
    }

    #[test]
    fn exact_match_is_undetectable() {
        let r = z_test(&ObservationWindow::new("pool", 100.0, 100)).unwrap();
        assert_eq!(r.z_score, 0.0);
        assert_eq!(r.verdict, Verdict::Undetectable);
        assert_eq!(r.method, TailMethod::Normal);
    }

    #[test]
    fn large_pool_deficit_is_detected() {
        let r = z_test(&ObservationWindow::new("pool", 10_000.0, 8889)).unwrap();
        assert!((r.z_score - 11.11).abs() < 1e-9);
        assert_eq!(r.verdict, Verdict::Detected);
        assert!((r.min_detectable_withhold_fraction - 0.03).abs() < 1e-12);
    }

    #[test]
    fn verdict_bands() {
        let at = |obs| {
            z_test(&ObservationWindow::new("p", 400.0, obs))
                .unwrap()
                .verdict
        };
        assert_eq!(at(361), Verdict::Undetectable); // z = 1.95
        assert_eq!(at(360), Verdict::Suspicious); // z = 2
        assert_eq!(at(341), Verdict::Suspicious); // z = 2.95
        assert_eq!(at(340), Verdict::Detected); // z = 3
    }

    #[test]
    fn verdict_monotone_in_observed() {
        for k in [5.0, 18.0, 29.9, 30.0, 250.0] {
            let mut last = Verdict::Detected;
            for obs in 0..(3 * k as u64) {
                let v = z_test(&ObservationWindow::new("p", k, obs))
                    .unwrap()
                    .verdict;
                assert!(v <= last, "k={k} obs={obs}");
                last = v;
            }
        }
    }

    #[test]
    fn zero_expectation_is_rejected() {
        assert!(matches!(
            z_test(&ObservationWindow::new("p", 0.0, 3)),
            Err(Error::ZeroExpectation { observed: 3 })
        ));
        assert!(z_test(&ObservationWindow::new("p", 0.0, 0)).is_err());
    }

    #[test]
    fn blocks_needed() {
        assert!((min_blocks_to_detect(1.0 / 9.0, 3.0).unwrap() - 729.0).abs() < 1e-9);
        assert_eq!(min_blocks_to_detect(1.0, 1.0).unwrap(), 1.0);
        assert!(min_blocks_to_detect(0.0, 3.0).is_err());
        assert!(min_blocks_to_detect(0.5, 0.0).is_err());
    }

    #[test]
    fn faster_blocks_shrink_threshold() {
        let g = detectability_gain(600.0).unwrap();
        assert!((g - 24.494_897).abs() < 1e-5);
        // Same wall time, 600× the events: K grows 600×, detectable w shrinks √600×.
        let slow = z_test(&ObservationWindow::new("m", 18.0, 18)).unwrap();
        let fast = z_test(&ObservationWindow::new("m", 18.0 * 600.0, 10_800)).unwrap();
        let ratio = slow.min_detectable_withhold_fraction / fast.min_detectable_withhold_fraction;
        assert!((ratio - g).abs() < 1e-9);
    }
}
