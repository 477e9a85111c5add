//! Block-by-block Monte Carlo engine.
//!
//! Each step is one block discovery. The finder is drawn in proportion to
//! hashpower, then its strategy decides what happens to the block:
//!
//! * honest miners publish on the longest public chain; during a tie between
//!   an honest and a cartel branch the finder sits on the cartel branch with
//!   probability γ, re-drawn for every block;
//! * withholding infiltrators destroy the block (their shares still count);
//! * the selfish cartel mines on its private tip and publishes whatever the
//!   state machine in [`crate::selfish`] tells it to.
//!
//! At the horizon the cartel flushes its secret blocks, the longest chain
//! (earliest-published on a tie) becomes the main chain, and rewards are
//! credited to solo miners or to pools, which settle by their reward scheme.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amount::Amount;
use crate::dag::{BlockEvent, BlockFlags, BlockId, BlockStatus};
use crate::error::{Error, Result};
use crate::ids::PoolId;
use crate::model::sample_block_count;
use crate::pool::{distribute, PoolLedger};
use crate::selfish::{self, Branch, SelfishEvent, SelfishState};
use crate::withholding::{apply_strategy, Action, Found};

use super::config::{SimConfig, Strategy};
use super::result::SimResult;

/// Categorical sampler over non-negative weights.
#[derive(Debug, Clone)]
pub struct OwnerSampler {
    cumulative: Vec<f64>,
    total: f64,
}

impl OwnerSampler {
    pub fn new(powers: &[f64]) -> Result<Self> {
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(powers.len());
        for &p in powers {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::arg("power", p, "must be finite and non-negative"));
            }
            total += p;
            cumulative.push(total);
        }
        if total <= 0.0 {
            return Err(Error::ZeroPower);
        }
        Ok(OwnerSampler { cumulative, total })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// Draws the index of the next block finder in proportion to `powers`.
pub fn next_block_owner<R: Rng + ?Sized>(powers: &[f64], rng: &mut R) -> Result<usize> {
    Ok(OwnerSampler::new(powers)?.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForkOutcome {
    A,
    B,
    Undecided,
}

/// Longest-chain rule between two competing branches.
pub fn resolve_fork(branch_a_depth: u64, branch_b_depth: u64) -> ForkOutcome {
    use std::cmp::Ordering::*;
    match branch_a_depth.cmp(&branch_b_depth) {
        Greater => ForkOutcome::A,
        Less => ForkOutcome::B,
        Equal => ForkOutcome::Undecided,
    }
}

struct Engine<'c> {
    cfg: &'c SimConfig,
    rng: ChaCha8Rng,
    blocks: Vec<BlockEvent>,
    /// Published blocks at the maximum public height.
    tips: Vec<BlockId>,
    public_height: u32,
    selfish: Vec<bool>,
    cartel: Option<SelfishState>,
    /// Honest miners (by index) and a sampler over them, for natural forks.
    honest: Option<(Vec<usize>, OwnerSampler)>,
    step: u32,
    withheld: u64,
}

pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let powers: Vec<f64> = cfg.miners.iter().map(|m| m.power_fraction).collect();
    let sampler = OwnerSampler::new(&powers)?;
    let selfish: Vec<bool> = cfg.miners.iter().map(|m| m.strategy.is_selfish()).collect();
    let has_cartel = selfish.iter().any(|&s| s);

    let honest = if cfg.natural_fork_rate > 0.0 {
        let idx: Vec<usize> = (0..cfg.miners.len())
            .filter(|&i| cfg.miners[i].strategy == Strategy::Honest)
            .collect();
        let w: Vec<f64> = idx.iter().map(|&i| powers[i]).collect();
        OwnerSampler::new(&w).ok().map(|s| (idx, s))
    } else {
        None
    };

    let capacity = cfg.total_blocks as usize + 1;
    let mut engine = Engine {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        blocks: Vec::with_capacity(capacity),
        tips: vec![BlockId::GENESIS],
        public_height: 0,
        selfish,
        cartel: has_cartel.then(SelfishState::default),
        honest,
        step: 0,
        withheld: 0,
    };
    engine.blocks.push(BlockEvent {
        id: BlockId::GENESIS,
        height: 0,
        owner: None,
        parent: None,
        published_at: None,
        status: BlockStatus::Main,
        flags: BlockFlags::default(),
    });

    for step in 0..cfg.total_blocks {
        engine.step = step as u32;
        let finder = sampler.sample(&mut engine.rng);
        match apply_strategy(&cfg.miners[finder], Found::Block) {
            Action::Publish => engine.honest_block(finder)?,
            Action::Drop => engine.withheld_block(finder),
            Action::Conceal => engine.cartel_block(finder)?,
            Action::SubmitShare(_) | Action::Ignore => unreachable!("blocks are never shares"),
        }
    }
    engine.finish()
}

impl Engine<'_> {
    fn pick(&mut self, candidates: &[BlockId]) -> BlockId {
        match candidates.len() {
            1 => candidates[0],
            n => candidates[self.rng.random_range(0..n)],
        }
    }

    fn owned_by_cartel(&self, id: BlockId) -> bool {
        self.blocks[id.index()]
            .owner
            .is_some_and(|o| self.selfish[o as usize])
    }

    fn honest_parent(&mut self) -> (BlockId, Branch) {
        if self.tips.len() == 1 {
            return (self.tips[0], Branch::Honest);
        }
        let tips = self.tips.clone();
        let in_tie = self.cartel.as_ref().is_some_and(|s| s.public_fork);
        let (cartel, others): (Vec<BlockId>, Vec<BlockId>) =
            tips.iter().partition(|&&b| self.owned_by_cartel(b));
        if in_tie && !cartel.is_empty() && !others.is_empty() {
            if self.rng.random::<f64>() < self.cfg.gamma {
                (self.pick(&cartel), Branch::Attacker)
            } else {
                (self.pick(&others), Branch::Honest)
            }
        } else {
            (self.pick(&tips), Branch::Honest)
        }
    }

    fn cartel_parent(&mut self) -> BlockId {
        if let Some(&last) = self.cartel.as_ref().and_then(|s| s.secret_blocks.back()) {
            return last;
        }
        if let Some(&own) = self.tips.iter().find(|&&b| self.owned_by_cartel(b)) {
            return own;
        }
        let tips = self.tips.clone();
        self.pick(&tips)
    }

    fn new_block(&mut self, parent: BlockId, owner: usize, flags: BlockFlags) -> BlockId {
        let id = BlockId(self.blocks.len() as u32);
        let height = self.blocks[parent.index()].height + 1;
        self.blocks.push(BlockEvent {
            id,
            height,
            owner: Some(owner as u32),
            parent: Some(parent),
            published_at: None,
            status: BlockStatus::Stale,
            flags,
        });
        id
    }

    fn publish(&mut self, id: BlockId) {
        let step = self.step;
        let block = &mut self.blocks[id.index()];
        block.published_at = Some(step);
        let h = block.height;
        if h > self.public_height {
            self.public_height = h;
            self.tips.clear();
            self.tips.push(id);
        } else {
            block.flags.contested = true;
            if h == self.public_height {
                self.tips.push(id);
            }
        }
    }

    fn cartel_event(&mut self, event: SelfishEvent) -> Result<Vec<BlockId>> {
        let state = self.cartel.take().unwrap_or_default();
        let (state, out) = selfish::step(state, event)?;
        self.cartel = Some(state);
        for &b in &out {
            self.publish(b);
        }
        Ok(out)
    }

    fn honest_block(&mut self, finder: usize) -> Result<()> {
        let (parent, branch) = self.honest_parent();
        let id = self.new_block(parent, finder, BlockFlags::default());
        self.publish(id);

        if self.cfg.natural_fork_rate > 0.0 && self.rng.random::<f64>() < self.cfg.natural_fork_rate
        {
            if let Some((idx, sampler)) = &self.honest {
                let twin_owner = idx[sampler.sample(&mut self.rng)];
                let twin = self.new_block(parent, twin_owner, BlockFlags::default());
                self.publish(twin);
            }
        }

        if self.cartel.is_some() {
            self.cartel_event(SelfishEvent::HonestFinds(branch))?;
        }
        Ok(())
    }

    fn withheld_block(&mut self, finder: usize) {
        let (parent, _) = self.honest_parent();
        self.new_block(
            parent,
            finder,
            BlockFlags {
                was_withheld: true,
                ..Default::default()
            },
        );
        self.withheld += 1;
    }

    fn cartel_block(&mut self, finder: usize) -> Result<()> {
        let parent = self.cartel_parent();
        let id = self.new_block(parent, finder, BlockFlags::default());
        let published = self.cartel_event(SelfishEvent::AttackerFinds(id))?;
        if !published.contains(&id) {
            self.blocks[id.index()].flags.was_secret = true;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<SimResult> {
        self.step = self.cfg.total_blocks as u32;
        if let Some(state) = self.cartel.take() {
            for b in state.secret_blocks {
                self.publish(b);
            }
        }

        let tip = *self
            .tips
            .iter()
            .min_by_key(|&&b| (self.blocks[b.index()].published_at, b))
            .expect("at least the genesis tip");
        let mut cursor = Some(tip);
        while let Some(b) = cursor {
            let block = &mut self.blocks[b.index()];
            block.status = BlockStatus::Main;
            cursor = block.parent;
        }

        let cfg = self.cfg;
        let rho = cfg.fork_punishment.unwrap_or(0.0);
        let block_reward = cfg.reward_per_block + cfg.transaction_fees;
        let punished_reward = block_reward.scale(1.0 - rho);

        let mut ledgers: BTreeMap<PoolId, PoolLedger> = cfg
            .pools
            .iter()
            .map(|p| (p.id.clone(), PoolLedger::default()))
            .collect();
        let mut revenue: BTreeMap<_, Amount> = cfg
            .miners
            .iter()
            .map(|m| (m.id.clone(), Amount::ZERO))
            .collect();
        let mut main_blocks = 0u64;
        let mut contested_main = 0u64;
        let mut distributed = Amount::ZERO;

        for b in &self.blocks {
            let (BlockStatus::Main, Some(owner)) = (b.status, b.owner) else {
                continue;
            };
            main_blocks += 1;
            let reward = if b.flags.contested && rho > 0.0 {
                contested_main += 1;
                punished_reward
            } else {
                block_reward
            };
            distributed += reward;
            let miner = &cfg.miners[owner as usize];
            match &miner.pool {
                Some(pool) => ledgers
                    .get_mut(pool)
                    .ok_or_else(|| Error::UnknownPool(pool.to_string()))?
                    .credit_block(reward),
                None => {
                    *revenue
                        .get_mut(&miner.id)
                        .expect("every miner has an entry") += reward
                }
            }
        }

        let opportunities = cfg.total_blocks as f64;
        let per_block = cfg.share_difficulty_ratio as f64;
        for m in &cfg.miners {
            let Some(pool) = &m.pool else { continue };
            let expected = m.power_fraction * opportunities * per_block;
            let shares = if cfg.share_noise {
                sample_block_count(expected, &mut self.rng)?
            } else {
                expected.round() as u64
            };
            ledgers
                .get_mut(pool)
                .expect("pool references validated")
                .submit_shares(&m.id, shares);
        }

        let mut operator_balance = BTreeMap::new();
        for p in &cfg.pools {
            let ledger = &ledgers[&p.id];
            let dist = distribute(ledger, p)?;
            for (miner, amount) in dist.payouts {
                *revenue.get_mut(&miner).expect("pool members are miners") += amount;
            }
            operator_balance.insert(p.id.clone(), dist.operator_balance);
        }

        let stale_count = self
            .blocks
            .iter()
            .filter(|b| b.status == BlockStatus::Stale && !b.flags.was_withheld)
            .count() as u64;

        Ok(SimResult {
            miners: cfg.miners.clone(),
            dag: self.blocks,
            revenue,
            pools: ledgers,
            operator_balance,
            opportunities: cfg.total_blocks,
            main_blocks,
            stale_count,
            withheld_count: self.withheld,
            contested_main_blocks: contested_main,
            distributed,
            reward_per_block: cfg.reward_per_block,
            shares_per_block: cfg.share_difficulty_ratio,
        })
    }
}
