//! Consistency audit of a pay-per-share pool.
//!
//! Two independent checks. The advertised rate times the difficulty is what
//! the pool pays per block's worth of shares; it should not fall below the
//! block reward net of fees. And, when the ledger is available, the blocks
//! the pool actually found should match what its share count predicts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Difficulty;
use crate::pool::{pps_rate_check, PoolConfig, PoolLedger, RewardScheme};

use super::{z_test, DetectionReport, ObservationWindow, Verdict};

/// Relative shortfall of the implied per-block payout tolerated before the
/// audit flags it.
pub const DEFAULT_AUDIT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub pool: String,
    /// Difficulty × PPS rate, in BTC.
    pub implied_block_payout: f64,
    /// Block reward net of pool fees, in BTC.
    pub fair_block_payout: f64,
    pub payout_gap: f64,
    /// Revenue earned per block's worth of submitted shares, over the gross
    /// reward. About `1 − w` when a fraction `w` of the pool withholds.
    pub realized_ratio: Option<f64>,
    pub block_test: Option<DetectionReport>,
    pub flagged: bool,
    pub findings: Vec<String>,
}

/// `difficulty` is the pool's difficulty in share units, i.e. expected shares
/// per block.
pub fn consistency_audit(
    cfg: &PoolConfig,
    ledger: &PoolLedger,
    difficulty: Difficulty,
    reward_per_block: f64,
    tolerance: f64,
) -> Result<AuditReport> {
    let RewardScheme::PayPerShare { rate } = cfg.reward_scheme else {
        return Err(Error::NotPps(cfg.id.to_string()));
    };
    if !(0.0..1.0).contains(&tolerance) {
        return Err(Error::arg("tolerance", tolerance, "must be in [0, 1)"));
    }
    let implied = pps_rate_check(difficulty, rate)?;
    let fair = reward_per_block * (1.0 - cfg.fee_fraction);
    let mut findings = Vec::new();
    if implied < fair * (1.0 - tolerance) {
        findings.push(format!(
            "pays {implied:.4} BTC per block of shares, below the fair {fair:.4} BTC"
        ));
    }

    let shares = ledger.total_shares();
    let (realized_ratio, block_test) = if shares > 0 {
        let expected = shares as f64 / difficulty.value();
        let ratio = ledger.revenue.to_btc() / (expected * reward_per_block);
        let test = z_test(&ObservationWindow::new(
            cfg.id.as_str(),
            expected,
            ledger.blocks_found,
        ))?;
        if test.verdict == Verdict::Detected {
            findings.push(format!(
                "found {} blocks against {expected:.1} expected (z = {:.2})",
                ledger.blocks_found, test.z_score
            ));
        }
        (Some(ratio), Some(test))
    } else {
        (None, None)
    };

    Ok(AuditReport {
        pool: cfg.id.to_string(),
        implied_block_payout: implied,
        fair_block_payout: fair,
        payout_gap: implied - fair,
        realized_ratio,
        block_test,
        flagged: !findings.is_empty(),
        findings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amount::Amount;
    use crate::ids::PoolId;

    fn pps(rate: f64, fee: f64) -> PoolConfig {
        PoolConfig {
            id: PoolId::new("guild"),
            fee_fraction: fee,
            reward_scheme: RewardScheme::PayPerShare { rate },
        }
    }

    #[test]
    fn historical_rate_is_consistent() {
        let d = Difficulty::new(1_418_481_395.0).unwrap();
        let r = consistency_audit(
            &pps(1.630_264_60e-8, 0.08),
            &PoolLedger::default(),
            d,
            25.0,
            0.01,
        )
        .unwrap();
        assert!((r.implied_block_payout - 23.125).abs() < 1e-3);
        assert!((r.fair_block_payout - 23.0).abs() < 1e-12);
        assert!(r.payout_gap > 0.0);
        assert!(!r.flagged);
        assert_eq!(r.realized_ratio, None);
    }

    #[test]
    fn fair_rate_has_zero_gap() {
        let d = Difficulty::new(1000.0).unwrap();
        let r = consistency_audit(
            &pps(25.0 / 1000.0, 0.0),
            &PoolLedger::default(),
            d,
            25.0,
            0.01,
        )
        .unwrap();
        assert!(r.payout_gap.abs() < 1e-12);
        assert!(!r.flagged);
    }

    #[test]
    fn underpaying_rate_is_flagged() {
        let d = Difficulty::new(1000.0).unwrap();
        let r = consistency_audit(&pps(0.02, 0.0), &PoolLedger::default(), d, 25.0, 0.01).unwrap();
        assert!(r.flagged);
    }

    #[test]
    fn block_deficit_is_flagged() {
        let d = Difficulty::new(1000.0).unwrap();
        let mut ledger = PoolLedger::default();
        ledger.submit_shares(&"m".into(), 10_000 * 1000);
        for _ in 0..8889 {
            ledger.credit_block(Amount::from_btc_int(25));
        }
        let r = consistency_audit(&pps(0.025, 0.0), &ledger, d, 25.0, 0.01).unwrap();
        assert!((r.realized_ratio.unwrap() - 0.8889).abs() < 1e-9);
        assert_eq!(r.block_test.as_ref().unwrap().verdict, Verdict::Detected);
        assert!(r.flagged);
    }

    #[test]
    fn proportional_pool_is_rejected() {
        let d = Difficulty::new(1000.0).unwrap();
        assert!(matches!(
            consistency_audit(
                &PoolConfig::proportional("p"),
                &PoolLedger::default(),
                d,
                25.0,
                0.01
            ),
            Err(Error::NotPps(_))
        ));
    }
}
