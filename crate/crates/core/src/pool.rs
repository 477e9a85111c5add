//! Pool ledgers and reward distribution.
//!
//! A pool collects shares from its members and is credited with the reward of
//! every block its members publish. At settlement the revenue is split either
//! in proportion to shares or at a fixed pay-per-share rate. All money is
//! integer satoshis so conservation can be checked exactly.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::{Error, Result};
use crate::ids::{MinerId, PoolId};
use crate::model::Difficulty;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardScheme {
    Proportional,
    /// Fixed payment per difficulty-1 share, in BTC.
    PayPerShare {
        rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub id: PoolId,
    #[serde(default)]
    pub fee_fraction: f64,
    #[serde(default = "default_scheme")]
    pub reward_scheme: RewardScheme,
}

fn default_scheme() -> RewardScheme {
    RewardScheme::Proportional
}

impl PoolConfig {
    pub fn proportional(id: impl Into<String>) -> Self {
        PoolConfig {
            id: PoolId::new(id),
            fee_fraction: 0.0,
            reward_scheme: RewardScheme::Proportional,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.fee_fraction) {
            return Err(Error::config(
                format!("pools[{}].fee_fraction", self.id),
                format!("must be in [0, 1), got {}", self.fee_fraction),
            ));
        }
        if let RewardScheme::PayPerShare { rate } = self.reward_scheme {
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::config(
                    format!("pools[{}].reward_scheme.rate", self.id),
                    format!("must be finite and non-negative, got {rate}"),
                ));
            }
        }
        Ok(())
    }
}

/// Running account of one pool.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolLedger {
    pub shares: BTreeMap<MinerId, u64>,
    pub blocks_found: u64,
    pub revenue: Amount,
}

impl PoolLedger {
    pub fn total_shares(&self) -> u64 {
        self.shares.values().sum()
    }

    pub fn submit_shares(&mut self, miner: &MinerId, count: u64) {
        *self.shares.entry(miner.clone()).or_default() += count;
    }

    pub fn credit_block(&mut self, reward: Amount) {
        self.blocks_found += 1;
        self.revenue += reward;
    }
}

/// Result of settling a ledger.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Distribution {
    pub payouts: BTreeMap<MinerId, Amount>,
    /// What the operator keeps (fees) or, for a PPS pool, its profit or loss
    /// in satoshis. `Σ payouts + operator_balance == revenue` always.
    pub operator_balance: i64,
}

impl Distribution {
    pub fn total_paid(&self) -> Amount {
        self.payouts.values().copied().sum()
    }
}

pub fn distribute(ledger: &PoolLedger, cfg: &PoolConfig) -> Result<Distribution> {
    match cfg.reward_scheme {
        RewardScheme::Proportional => distribute_proportional(ledger, cfg),
        RewardScheme::PayPerShare { rate } => Ok(distribute_pps(ledger, rate)),
    }
}

/// Splits `revenue × (1 − fee)` in proportion to shares.
///
/// Each member receives the floor of their exact quota; leftover satoshis go
/// one each to the largest fractional remainders, ties broken by miner id.
pub fn distribute_proportional(ledger: &PoolLedger, cfg: &PoolConfig) -> Result<Distribution> {
    cfg.validate()?;
    let revenue = ledger.revenue;
    let net = revenue.scale(1.0 - cfg.fee_fraction);
    let total = ledger.total_shares() as u128;
    if total == 0 {
        if revenue > Amount::ZERO {
            return Err(Error::NoShares {
                revenue_sat: revenue.to_sat(),
            });
        }
        return Ok(Distribution {
            payouts: ledger
                .shares
                .keys()
                .map(|m| (m.clone(), Amount::ZERO))
                .collect(),
            operator_balance: 0,
        });
    }

    let net_sat = net.to_sat() as u128;
    let mut quotas: Vec<(&MinerId, u128, u128)> = ledger
        .shares
        .iter()
        .map(|(m, &s)| {
            let exact = net_sat * s as u128;
            (m, exact / total, exact % total)
        })
        .collect();

    let floored: u128 = quotas.iter().map(|q| q.1).sum();
    let mut leftover = (net_sat - floored) as usize;
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    // Stable sort keeps BTreeMap (id) order among equal remainders.
    order.sort_by(|&a, &b| quotas[b].2.cmp(&quotas[a].2));
    for &i in &order {
        if leftover == 0 {
            break;
        }
        if quotas[i].2 > 0 {
            quotas[i].1 += 1;
            leftover -= 1;
        }
    }
    debug_assert_eq!(leftover, 0);

    let payouts = quotas
        .into_iter()
        .map(|(m, sat, _)| (m.clone(), Amount::from_sat(sat as u64)))
        .collect();
    Ok(Distribution {
        payouts,
        operator_balance: (revenue.to_sat() - net.to_sat()) as i64,
    })
}

/// Pays every share at `rate` BTC regardless of what the pool earned.
pub fn distribute_pps(ledger: &PoolLedger, rate: f64) -> Distribution {
    let payouts: BTreeMap<MinerId, Amount> = ledger
        .shares
        .iter()
        .map(|(m, &s)| (m.clone(), Amount::from_btc(s as f64 * rate)))
        .collect();
    let paid: Amount = payouts.values().copied().sum();
    Distribution {
        payouts,
        operator_balance: ledger.revenue.to_sat() as i64 - paid.to_sat() as i64,
    }
}

/// Per-block payout implied by a PPS rate: a block is worth `difficulty`
/// difficulty-1 shares.
pub fn pps_rate_check(difficulty: Difficulty, pps_rate: f64) -> Result<f64> {
    if !pps_rate.is_finite() || pps_rate < 0.0 {
        return Err(Error::arg(
            "pps rate",
            pps_rate,
            "must be finite and non-negative",
        ));
    }
    Ok(difficulty.value() * pps_rate)
}

/// Revenue factor left to a pool when a fraction `withheld` of its hashpower
/// submits shares but destroys blocks.
pub fn expected_pool_deficit(withheld: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&withheld) {
        return Err(Error::arg(
            "withheld fraction",
            withheld,
            "must be in [0, 1)",
        ));
    }
    Ok(1.0 - withheld)
}

/// Writes `miner,shares,payout` rows (payout in BTC).
pub fn write_ledger_csv<W: Write>(out: W, ledger: &PoolLedger, dist: &Distribution) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["miner", "shares", "payout"])?;
    for (miner, shares) in &ledger.shares {
        let paid = dist.payouts.get(miner).copied().unwrap_or_default();
        w.write_record([
            miner.as_str(),
            &shares.to_string(),
            &format!("{:.8}", paid.to_btc()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
