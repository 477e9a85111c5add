//! Generalized block withholding.
//!
//! A rogue coalition holding a fraction `alpha` of network hashpower sends a
//! fraction `beta` of it into the public pools, where it submits every share
//! but destroys every full block. The remaining `alpha·(1 − beta)` mines
//! honestly on its own. Public pools keep paying the infiltrators for their
//! shares, so the whole pool (infiltrators included) is diluted by
//! `(1 − α)/(1 − α(1 − β))`, while the private rogue capacity is not.
//!
//! The premium is measured the way pool members experience it: revenue per
//! unit of hashpower for the coalition, relative to the same quantity for
//! honest miners.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{MinerId, PoolId};
use crate::pool::PoolConfig;
use crate::sim::{self, replicate_seeds, MinerSpec, SimConfig, SimResult, Strategy};
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WithholdParams {
    pub alpha: f64,
    pub beta: f64,
}

impl WithholdParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = WithholdParams { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::arg("alpha", self.alpha, "must be in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::arg("beta", self.beta, "must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn infiltrating_power(&self) -> f64 {
        self.alpha * self.beta
    }

    pub fn private_power(&self) -> f64 {
        self.alpha * (1.0 - self.beta)
    }

    /// Share-power of the infiltrated pools: honest members plus infiltrators.
    pub fn pool_share_power(&self) -> f64 {
        1.0 - self.private_power()
    }
}

/// Coalition premium over honest miners: `αβ(1−β)/(1−α)`.
pub fn relative_gain(p: WithholdParams) -> Result<f64> {
    p.validate()?;
    Ok(p.alpha * p.beta * (1.0 - p.beta) / (1.0 - p.alpha))
}

/// The same premium assembled from its parts: the private share earns
/// `1 + private_branch_premium`, the infiltrating share earns what honest pool
/// members earn.
pub fn relative_gain_by_parts(p: WithholdParams) -> Result<f64> {
    let private = 1.0 + private_branch_premium(p)?;
    Ok((1.0 - p.beta) * private + p.beta - 1.0)
}

/// Extra return of the private rogue capacity over pool members:
/// `(1 − α(1−β))/(1 − α) − 1`.
pub fn private_branch_premium(p: WithholdParams) -> Result<f64> {
    p.validate()?;
    Ok(p.pool_share_power() / (1.0 - p.alpha) - 1.0)
}

/// Fraction of an infiltrated pool's hashpower that destroys blocks.
pub fn in_pool_withhold_fraction(p: WithholdParams) -> Result<f64> {
    p.validate()?;
    Ok(p.infiltrating_power() / p.pool_share_power())
}

/// Revenue factor applied to every member of an infiltrated pool.
pub fn dilution_factor(p: WithholdParams) -> Result<f64> {
    crate::pool::expected_pool_deficit(in_pool_withhold_fraction(p)?)
}

/// Argmax of [`relative_gain`] over `β ∈ {0, 1/steps, …, 1}`; the first
/// maximizer wins ties.
pub fn grid_argmax_beta(alpha: f64, steps: u32) -> Result<f64> {
    if steps == 0 {
        return Err(Error::arg("steps", 0.0, "must be at least 1"));
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=steps {
        let beta = i as f64 / steps as f64;
        let g = relative_gain(WithholdParams::new(alpha, beta)?)?;
        if g > best.0 {
            best = (g, beta);
        }
    }
    Ok(best.1)
}

/// The gain-maximizing infiltration split for a given `alpha`, found by grid
/// search at resolution 0.01.
pub fn optimal_beta(alpha: f64) -> Result<f64> {
    grid_argmax_beta(alpha, 100)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Found {
    Share,
    Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    SubmitShare(PoolId),
    Publish,
    /// Destroyed without telling the pool.
    Drop,
    /// Handed to the selfish cartel's state machine.
    Conceal,
    /// Solo miners have nobody to send shares to.
    Ignore,
}

/// What a miner does with a proof of work it just found.
pub fn apply_strategy(miner: &MinerSpec, found: Found) -> Action {
    match (found, &miner.strategy) {
        (Found::Share, _) => match &miner.pool {
            Some(pool) => Action::SubmitShare(pool.clone()),
            None => Action::Ignore,
        },
        (Found::Block, Strategy::Honest) => Action::Publish,
        (Found::Block, Strategy::WithholdInfiltrator { .. }) => Action::Drop,
        (Found::Block, Strategy::SelfishMember { .. }) => Action::Conceal,
    }
}

pub const PRIVATE_ROGUE_ID: &str = "rogue-private";

/// Population layout for a withholding experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithholdScenario {
    pub params: WithholdParams,
    /// Relative sizes of the public pools. Infiltrators spread over them in
    /// proportion to these weights. One aggregate pool by default.
    #[serde(default = "one_pool")]
    pub public_pools: Vec<f64>,
    /// Honest identities per public pool, of equal power.
    #[serde(default = "one")]
    pub honest_identities_per_pool: usize,
    /// Infiltrator identities per public pool, of equal power.
    #[serde(default = "one")]
    pub infiltrator_identities_per_pool: usize,
    /// Rename infiltrator identities in every replicate.
    #[serde(default)]
    pub identity_churn: bool,
}

fn one_pool() -> Vec<f64> {
    vec![1.0]
}

fn one() -> usize {
    1
}

impl WithholdScenario {
    pub fn new(params: WithholdParams) -> Self {
        WithholdScenario {
            params,
            public_pools: one_pool(),
            honest_identities_per_pool: 1,
            infiltrator_identities_per_pool: 1,
            identity_churn: false,
        }
    }

    pub fn pool_id(i: usize) -> PoolId {
        PoolId::new(format!("public-{i}"))
    }

    /// Builds the miner population. `replicate` only matters with identity
    /// churn, where it changes infiltrator names.
    pub fn config(&self, blocks: u64, seed: u64, replicate: u64) -> Result<SimConfig> {
        self.params.validate()?;
        if self.public_pools.is_empty() || self.public_pools.iter().any(|&w| w.is_nan() || w <= 0.0)
        {
            return Err(Error::config(
                "public_pools",
                "need at least one positive weight",
            ));
        }
        if self.honest_identities_per_pool == 0 || self.infiltrator_identities_per_pool == 0 {
            return Err(Error::config(
                "identities",
                "need at least one identity per pool",
            ));
        }
        let p = self.params;
        let weight_sum: f64 = self.public_pools.iter().sum();
        let mut miners = Vec::new();
        let mut pools = Vec::new();
        for (i, w) in self.public_pools.iter().enumerate() {
            let pool = Self::pool_id(i);
            let share = w / weight_sum;
            let honest = (1.0 - p.alpha) * share / self.honest_identities_per_pool as f64;
            for j in 0..self.honest_identities_per_pool {
                miners.push(MinerSpec::pooled(
                    format!("honest-{i}-{j}"),
                    honest,
                    Strategy::Honest,
                    pool.as_str(),
                ));
            }
            let rogue =
                p.infiltrating_power() * share / self.infiltrator_identities_per_pool as f64;
            for k in 0..self.infiltrator_identities_per_pool {
                let name = if self.identity_churn {
                    format!("infiltrator-{i}-{k}-r{replicate}")
                } else {
                    format!("infiltrator-{i}-{k}")
                };
                miners.push(MinerSpec::pooled(
                    name,
                    rogue,
                    Strategy::WithholdInfiltrator {
                        target_pool: pool.clone(),
                    },
                    pool.as_str(),
                ));
            }
            pools.push(PoolConfig::proportional(pool.as_str()));
        }
        miners.push(MinerSpec::solo(
            PRIVATE_ROGUE_ID,
            p.private_power(),
            Strategy::Honest,
        ));
        normalize(&mut miners);
        Ok(SimConfig::new(miners, blocks, seed).with_pools(pools))
    }
}

/// Absorbs floating-point drift from the power split into the largest miner
/// so the fractions sum to one.
fn normalize(miners: &mut [MinerSpec]) {
    let total: f64 = miners.iter().map(|m| m.power_fraction).sum();
    if let Some(big) = miners
        .iter_mut()
        .max_by(|a, b| a.power_fraction.total_cmp(&b.power_fraction))
    {
        big.power_fraction = (big.power_fraction + 1.0 - total).clamp(0.0, 1.0);
    }
}

pub fn is_rogue(m: &MinerSpec) -> bool {
    m.strategy.is_infiltrator() || m.id.as_str() == PRIVATE_ROGUE_ID
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WithholdOutcome {
    pub rogue_power: f64,
    pub rogue_revenue_fraction: f64,
    /// Rogue revenue per unit power over honest revenue per unit power, minus one.
    pub premium: f64,
    /// Honest revenue fraction over honest power, minus one.
    pub honest_fair_share_premium: f64,
    /// Main-chain blocks per simulated discovery.
    pub block_rate: f64,
}

pub fn outcome(result: &SimResult) -> WithholdOutcome {
    let total = result.total_revenue().to_sat() as f64;
    let (mut rogue_power, mut rogue_rev) = (0.0, 0.0);
    for m in result.miners.iter().filter(|m| is_rogue(m)) {
        rogue_power += m.power_fraction;
        rogue_rev += result.revenue_of(&m.id).to_sat() as f64;
    }
    let honest_power = 1.0 - rogue_power;
    let honest_rev = total - rogue_rev;
    let rogue_frac = rogue_rev / total;
    let honest_frac = honest_rev / total;
    WithholdOutcome {
        rogue_power,
        rogue_revenue_fraction: rogue_frac,
        premium: (rogue_frac / rogue_power) / (honest_frac / honest_power) - 1.0,
        honest_fair_share_premium: honest_frac / honest_power - 1.0,
        block_rate: result.main_blocks as f64 / result.opportunities as f64,
    }
}

/// Payout per submitted share for each member of `pool`.
pub fn per_share_payouts(result: &SimResult, pool: &PoolId) -> Vec<(MinerId, f64)> {
    let Some(ledger) = result.pools.get(pool) else {
        return Vec::new();
    };
    ledger
        .shares
        .iter()
        .filter(|(_, &s)| s > 0)
        .map(|(m, &s)| (m.clone(), result.revenue_of(m).to_sat() as f64 / s as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WithholdEstimate {
    pub params: WithholdParams,
    pub closed_form: f64,
    pub premium: Summary,
    pub block_rate: Summary,
    pub replicates: Vec<WithholdOutcome>,
}

impl WithholdEstimate {
    /// |simulated − closed form| in standard errors.
    pub fn deviation_in_se(&self) -> f64 {
        self.premium.z_from(self.closed_form).abs()
    }
}

/// Monte Carlo estimate of the coalition premium from independent replicates.
pub fn simulate(
    scenario: &WithholdScenario,
    blocks_per_replicate: u64,
    master_seed: u64,
    replicates: usize,
    threads: Option<usize>,
) -> Result<WithholdEstimate> {
    if replicates == 0 {
        return Err(Error::config("replicates", "must be at least 1"));
    }
    let seeds = replicate_seeds(master_seed, replicates);
    scenario
        .config(blocks_per_replicate, master_seed, 0)?
        .validate()?;
    let outcomes = sim::run_replicates_with(
        &seeds,
        threads,
        |i, seed| scenario.config(blocks_per_replicate, seed, i as u64),
        |_, r| outcome(r),
    )?;
    let premium = Summary::of(&outcomes.iter().map(|o| o.premium).collect::<Vec<_>>());
    let block_rate = Summary::of(&outcomes.iter().map(|o| o.block_rate).collect::<Vec<_>>());
    Ok(WithholdEstimate {
        params: scenario.params,
        closed_form: relative_gain(scenario.params)?,
        premium,
        block_rate,
        replicates: outcomes,
    })
}
