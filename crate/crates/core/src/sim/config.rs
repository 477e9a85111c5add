use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::{Error, Result};
use crate::ids::{CartelId, MinerId, PoolId};
use crate::pool::PoolConfig;

pub const DEFAULT_SHARES_PER_BLOCK: u64 = 1 << 32;
pub const DEFAULT_REWARD: Amount = Amount::from_btc_int(25);

/// Largest horizon the engine accepts; block ids are 32-bit and natural forks
/// can add one extra block per step.
pub const MAX_TOTAL_BLOCKS: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    Honest,
    /// Submits shares to `target_pool` but destroys every full block.
    WithholdInfiltrator {
        target_pool: PoolId,
    },
    SelfishMember {
        cartel: CartelId,
    },
}

impl Strategy {
    pub fn is_selfish(&self) -> bool {
        matches!(self, Strategy::SelfishMember { .. })
    }

    pub fn is_infiltrator(&self) -> bool {
        matches!(self, Strategy::WithholdInfiltrator { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerSpec {
    pub id: MinerId,
    /// Share of total network hashpower.
    pub power_fraction: f64,
    pub strategy: Strategy,
    /// `None` mines solo.
    #[serde(default)]
    pub pool: Option<PoolId>,
}

impl MinerSpec {
    pub fn solo(id: impl Into<String>, power_fraction: f64, strategy: Strategy) -> Self {
        MinerSpec {
            id: MinerId::new(id),
            power_fraction,
            strategy,
            pool: None,
        }
    }

    pub fn pooled(
        id: impl Into<String>,
        power_fraction: f64,
        strategy: Strategy,
        pool: impl Into<String>,
    ) -> Self {
        MinerSpec {
            pool: Some(PoolId::new(pool)),
            ..Self::solo(id, power_fraction, strategy)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub miners: Vec<MinerSpec>,
    #[serde(default)]
    pub pools: Vec<PoolConfig>,
    /// Number of block-discovery events to simulate.
    pub total_blocks: u64,
    /// Fraction of honest power that mines on the cartel's branch during a tie.
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_reward")]
    pub reward_per_block: Amount,
    /// Transaction fees collected with every main-chain block.
    #[serde(default)]
    pub transaction_fees: Amount,
    /// Expected difficulty-1 shares per block, i.e. the difficulty in share units.
    #[serde(default = "default_shares_per_block")]
    pub share_difficulty_ratio: u64,
    /// Draw share counts from a Poisson law instead of using expectations.
    #[serde(default)]
    pub share_noise: bool,
    pub seed: u64,
    /// Reward reduction ρ for main-chain blocks that were contested when published.
    #[serde(default)]
    pub fork_punishment: Option<f64>,
    /// Probability that an honest block is matched by a simultaneous honest
    /// competitor at the same height.
    #[serde(default)]
    pub natural_fork_rate: f64,
}

fn default_reward() -> Amount {
    DEFAULT_REWARD
}

fn default_shares_per_block() -> u64 {
    DEFAULT_SHARES_PER_BLOCK
}

impl SimConfig {
    pub fn new(miners: Vec<MinerSpec>, total_blocks: u64, seed: u64) -> Self {
        SimConfig {
            miners,
            pools: Vec::new(),
            total_blocks,
            gamma: 0.0,
            reward_per_block: DEFAULT_REWARD,
            transaction_fees: Amount::ZERO,
            share_difficulty_ratio: DEFAULT_SHARES_PER_BLOCK,
            share_noise: false,
            seed,
            fork_punishment: None,
            natural_fork_rate: 0.0,
        }
    }

    pub fn with_pools(mut self, pools: Vec<PoolConfig>) -> Self {
        self.pools = pools;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_blocks == 0 || self.total_blocks > MAX_TOTAL_BLOCKS {
            return Err(Error::config(
                "total_blocks",
                format!(
                    "must be in [1, {MAX_TOTAL_BLOCKS}], got {}",
                    self.total_blocks
                ),
            ));
        }
        unit_interval("gamma", self.gamma)?;
        unit_interval("natural_fork_rate", self.natural_fork_rate)?;
        if let Some(rho) = self.fork_punishment {
            unit_interval("fork_punishment", rho)?;
        }
        if self.share_difficulty_ratio == 0 {
            return Err(Error::config(
                "share_difficulty_ratio",
                "must be at least 1",
            ));
        }
        if self.miners.is_empty() {
            return Err(Error::config("miners", "at least one miner is required"));
        }

        let mut pool_ids = BTreeSet::new();
        for (i, p) in self.pools.iter().enumerate() {
            p.validate()?;
            if !pool_ids.insert(&p.id) {
                return Err(Error::config(
                    format!("pools[{i}].id"),
                    format!("duplicate pool `{}`", p.id),
                ));
            }
        }

        let mut miner_ids = BTreeSet::new();
        let mut total = 0.0;
        let mut cartels: BTreeMap<&CartelId, f64> = BTreeMap::new();
        for (i, m) in self.miners.iter().enumerate() {
            let at = |field: &str| format!("miners[{i}].{field}");
            if !miner_ids.insert(&m.id) {
                return Err(Error::config(
                    at("id"),
                    format!("duplicate miner `{}`", m.id),
                ));
            }
            if !m.power_fraction.is_finite() || !(0.0..=1.0).contains(&m.power_fraction) {
                return Err(Error::config(
                    at("power_fraction"),
                    format!("must be in [0, 1], got {}", m.power_fraction),
                ));
            }
            total += m.power_fraction;
            if let Some(pool) = &m.pool {
                if !pool_ids.contains(pool) {
                    return Err(Error::UnknownPool(pool.to_string()));
                }
            }
            match &m.strategy {
                Strategy::Honest => {}
                Strategy::WithholdInfiltrator { target_pool } => {
                    if !pool_ids.contains(target_pool) {
                        return Err(Error::UnknownPool(target_pool.to_string()));
                    }
                    if m.pool.as_ref() != Some(target_pool) {
                        return Err(Error::config(
                            at("pool"),
                            format!(
                                "infiltrator must be a member of its target pool `{target_pool}`"
                            ),
                        ));
                    }
                }
                Strategy::SelfishMember { cartel } => {
                    *cartels.entry(cartel).or_default() += m.power_fraction;
                }
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "miners",
                format!("power fractions must sum to 1, got {total}"),
            ));
        }
        if cartels.len() > 1 {
            return Err(Error::config(
                "miners",
                "at most one selfish cartel is supported",
            ));
        }
        if let Some((cartel, &power)) = cartels.iter().next() {
            if power <= 0.0 {
                return Err(Error::config(
                    "miners",
                    format!("selfish cartel `{cartel}` has zero hashpower"),
                ));
            }
        }
        Ok(())
    }

    pub fn pool(&self, id: &PoolId) -> Option<&PoolConfig> {
        self.pools.iter().find(|p| &p.id == id)
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::config(name, format!("must be in [0, 1], got {v}")));
    }
    Ok(())
}
